"""coldfront: particle simulation of a supercooled freezing front."""
from .params import ParamError, PhysicalParams, ReducedParams, reduce, unreduce, validate
from .profile import ProfileError, SupercoolingProfile
from .cascade import (CascadeError, MassFunction, cascade_epsilon, cascade_limit,
                      empirical_jump_count, per_particle_advance, physical_jump)
from .particle import (BlowupEstimate, ConfigError, DensitySnapshot, JumpRecord,
                       NoisePath, SimConfig, SimError, Trajectory,
                       monte_carlo_blowup, restart, run, state_at,
                       wilson_interval)
from .picard import (FrontPath, PicardError, PicardResult, compare_with_particles,
                     fixed_point_jump_check, gamma_map, iterate_to_fixed_point)
from .diagnostics import (CheckResult, DiagnosticsError, DiagnosticsReport,
                          build_report, density_bound_check, energy_balance_check,
                          energy_balance_residual, jump_minimality_check,
                          no_late_jump_check, threshold_regime_check,
                          weak_form_residual)

__version__ = "0.1.0"

__all__ = [
    "ParamError", "PhysicalParams", "ReducedParams", "reduce", "unreduce", "validate",
    "ProfileError", "SupercoolingProfile",
    "CascadeError", "MassFunction", "cascade_epsilon", "cascade_limit",
    "empirical_jump_count", "per_particle_advance", "physical_jump",
    "BlowupEstimate", "ConfigError", "DensitySnapshot", "JumpRecord",
    "NoisePath", "SimConfig", "SimError", "Trajectory", "monte_carlo_blowup",
    "restart", "run", "state_at", "wilson_interval",
    "FrontPath", "PicardError", "PicardResult", "compare_with_particles",
    "fixed_point_jump_check", "gamma_map", "iterate_to_fixed_point",
    "CheckResult", "DiagnosticsError", "DiagnosticsReport",
    "build_report", "density_bound_check", "energy_balance_check",
    "energy_balance_residual", "jump_minimality_check",
    "no_late_jump_check", "threshold_regime_check", "weak_form_residual",
    "__version__",
]

"""Trajectory-level checks: conservation, weak-form residuals, density and
jump-timing bounds, jump minimality, and blow-up regime assertions.

Every check is a pure function of its recorded inputs; re-running a report is
deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cascade import MassFunction, empirical_jump_count, physical_jump
from .params import PhysicalParams, ReducedParams
from .particle import BlowupEstimate, DensitySnapshot, Trajectory
from .profile import SupercoolingProfile


class DiagnosticsError(ValueError):
    """Check cannot run on the given inputs."""


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "value": self.value, "bound": self.bound,
                "details": {k: _jsonable(v) for k, v in self.details.items()}}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class DiagnosticsReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.checks:
            verdict = "PASS" if c.passed else "FAIL"
            bound = "" if c.bound is None else f" (bound {c.bound:.6g})"
            out.append(f"[{verdict}] {c.name}: {c.value:.6g}{bound}")
        return out


def energy_balance_residual(traj: Trajectory) -> float:
    """Worst grid-point violation of absorbed mass = lam*kappa*(front - s0)."""
    lk = traj.physical.lam_kappa
    s0 = traj.physical.s0
    n = traj.config.n_particles
    absorbed_mass = traj.mass_pp * (n - traj.alive)
    return float(np.max(np.abs(lk * (traj.front - s0) - absorbed_mass)))


def energy_balance_check(traj: Trajectory) -> CheckResult:
    resid = energy_balance_residual(traj)
    bound = 1e-10 * max(traj.total_mass, 1e-300)
    return CheckResult("energy_balance", resid <= bound, resid, bound)


# Test-function battery: phi(t, x) with time, space, and second-space
# derivatives. Chosen to decay in x so every sum converges on any support.
def _battery(fn_id: str):
    if fn_id == "exp":
        def phi(t, x):
            return np.exp(-x)

        def dt_(t, x):
            return np.zeros_like(x)

        def dx(t, x):
            return -np.exp(-x)

        def dxx(t, x):
            return np.exp(-x)
    elif fn_id == "cos_gauss":
        def _g(x):
            return np.exp(-x * x / 8.0)

        def phi(t, x):
            return np.cos(x) * _g(x)

        def dt_(t, x):
            return np.zeros_like(x)

        def dx(t, x):
            return (-np.sin(x) - (x / 4.0) * np.cos(x)) * _g(x)

        def dxx(t, x):
            return ((x * x / 16.0 - 1.25) * np.cos(x)
                    + (x / 2.0) * np.sin(x)) * _g(x)
    elif fn_id == "exp_t_exp_x":
        def phi(t, x):
            return np.exp(-t) * np.exp(-x)

        def dt_(t, x):
            return -np.exp(-t) * np.exp(-x)

        def dx(t, x):
            return -np.exp(-t) * np.exp(-x)

        def dxx(t, x):
            return np.exp(-t) * np.exp(-x)
    else:
        raise DiagnosticsError(f"unknown test function {fn_id!r}")
    return phi, dt_, dx, dxx


WEAK_FORM_BATTERY = ("one", "exp", "cos_gauss", "exp_t_exp_x")


def weak_form_residual(traj: Trajectory, fn_id: str) -> float:
    """|LHS - RHS| of the weak formulation against one test function.

    Assembled from the recorded particle positions: time and Ito integrals as
    left-point sums on the step grid, the front line integral as a Stieltjes
    sum against front increments, and a correction per recorded jump using the
    absorbed particles' pre-jump positions. phi = 1 reduces analytically to
    the energy balance and is delegated so the two agree identically.
    """
    if fn_id == "one":
        return energy_balance_residual(traj)
    phi, dphi_dt, dphi_dx, dphi_dxx = _battery(fn_id)
    if traj.positions_history is None or traj.initial_positions is None:
        raise DiagnosticsError("weak-form assembly needs record_positions=True")
    if traj.first_step != 0:
        raise DiagnosticsError("weak-form assembly needs a full-grid run")
    p = traj.physical
    mass_pp = traj.mass_pp
    dt = traj.config.dt
    times = traj.times
    front = traj.front
    hist = traj.positions_history
    n_steps = traj.config.n_steps

    def msum(f, k):
        x = hist[k]
        if x.size == 0:
            return 0.0
        return mass_pp * float(np.sum(f(times[k], x)))

    lhs = -msum(phi, n_steps) + mass_pp * float(np.sum(phi(0.0, traj.initial_positions)))

    time_term = 0.0
    diff_term = 0.0
    ito_term = 0.0
    w_inc = traj.noise.increments
    for k in range(n_steps):
        time_term += msum(dphi_dt, k) * dt
        diff_term += msum(dphi_dxx, k) * dt
        ito_term += msum(dphi_dx, k) * float(w_inc[k])
    front_term = float(phi(0.0, np.array([p.s0]))[0]) * (front[0] - p.s0)
    for k in range(n_steps):
        front_term += float(phi(times[k + 1], np.array([front[k]]))[0]) * (front[k + 1] - front[k])

    jump_term = 0.0
    for rec in traj.jumps:
        if rec.count <= 0:
            continue
        taken = np.partition(rec.pre_offsets, rec.count - 1)[:rec.count]
        x = rec.front_before + taken
        at_front = float(phi(rec.time, np.array([rec.front_before]))[0])
        jump_term -= mass_pp * float(np.sum(at_front - phi(rec.time, x)))

    rhs = (-time_term - p.kappa * diff_term - p.theta * ito_term
           + p.lam_kappa * front_term + jump_term)
    return abs(lhs - rhs)


def density_bound_check(traj: Trajectory, t: float) -> CheckResult:
    """Snapshot density (unit-mass frame) against 1/(sigma*sqrt(2 pi (1-rho) t)).

    The stated bound uses (1-rho); the tighter (1-rho^2) version implied by
    the underlying Gaussian kernel is reported in the details. A 3-sigma
    multinomial allowance 3*sqrt(bins/(N*bin_width)) absorbs histogram noise.
    """
    if t <= 0:
        raise DiagnosticsError("density bound is vacuous at t <= 0")
    snap = _snapshot_at(traj, t)
    rp = traj.reduced
    total = traj.total_mass
    if total == 0.0:
        return CheckResult("density_bound", True, 0.0, math.inf,
                           {"time": t, "note": "zero mass"})
    dens_unit = snap.density / total
    max_density = float(dens_unit.max()) if dens_unit.size else 0.0
    bound = 1.0 / (rp.sigma * math.sqrt(2.0 * math.pi * (1.0 - rp.rho) * t))
    tighter = 1.0 / (rp.sigma * math.sqrt(2.0 * math.pi * (1.0 - rp.rho ** 2) * t))
    width = float(snap.bin_right[0] - snap.bin_left[0]) if snap.density.size else 1.0
    n = traj.config.n_particles
    allowance = 3.0 * math.sqrt(snap.density.size / (n * width)) if width > 0 else 0.0
    passed = max_density <= bound + allowance
    return CheckResult("density_bound", passed, max_density, bound + allowance,
                       {"time": float(snap.time), "stated_bound": bound,
                        "tighter_bound": tighter, "allowance": allowance,
                        "alive": snap.alive_count})


def _snapshot_at(traj: Trajectory, t: float) -> DensitySnapshot:
    for snap in traj.snapshots:
        if abs(snap.time - t) <= traj.config.dt / 2:
            return snap
    raise DiagnosticsError(f"no snapshot at t={t!r}")


def no_late_jump_check(traj: Trajectory, rp: ReducedParams | None = None) -> CheckResult:
    """No recorded macroscopic jump after t* = alpha^2/(2 pi sigma^2 (1-rho))."""
    rp = traj.reduced if rp is None else rp
    t_star = rp.alpha ** 2 / (2.0 * math.pi * rp.sigma ** 2 * (1.0 - rp.rho))
    late = [rec.time for rec in traj.jumps if rec.time > t_star]
    last = max((rec.time for rec in traj.jumps), default=math.nan)
    return CheckResult("no_late_jump", not late,
                       last if traj.jumps else math.nan, t_star,
                       {"t_star": t_star, "n_jumps": len(traj.jumps),
                        "late_times": late})


def jump_minimality_check(traj: Trajectory) -> CheckResult:
    """Replay every recorded jump's cascade scan; require bitwise agreement."""
    lk = traj.physical.lam_kappa
    mismatches = []
    for rec in traj.jumps:
        m = MassFunction.from_offsets(rec.pre_offsets, traj.mass_pp)
        size = physical_jump(m, lk, floor=rec.floor)
        count = empirical_jump_count(rec.pre_offsets, rec.advance_pp,
                                     floor=rec.floor)
        if size != rec.size or count != rec.count:
            mismatches.append({"step": rec.step_index, "recorded": rec.size,
                               "replayed": size, "recorded_count": rec.count,
                               "replayed_count": count})
    worst = max((abs(m["recorded"] - m["replayed"]) for m in mismatches),
                default=0.0)
    return CheckResult("jump_minimality", not mismatches, worst, 0.0,
                       {"n_jumps": len(traj.jumps), "mismatches": mismatches})


def threshold_regime_check(profile: SupercoolingProfile, p: PhysicalParams,
                           ensemble: BlowupEstimate) -> DiagnosticsReport:
    """Regime assertions for a replica ensemble of one scenario.

    Strictly subcritical supercooling must never blow up; a patch above
    lam*kappa must blow up in at least one replica; a stable start must never
    jump at time zero, and the jump-free fraction is reported as the
    survival-probability proxy.
    """
    lk = p.lam_kappa
    checks: list[CheckResult] = []
    sup = profile.sup_norm
    if sup < lk:
        checks.append(CheckResult(
            "subcritical_no_blowup", ensemble.n_jumped == 0,
            float(ensemble.n_jumped), 0.0,
            {"n_replicas": ensemble.n_replicas, "sup_norm": sup}))
    if any(v > lk for v in profile.values):
        checks.append(CheckResult(
            "supercritical_blowup_observed", ensemble.n_jumped >= 1,
            ensemble.p_hat, None,
            {"wilson_low": ensemble.ci_low, "wilson_high": ensemble.ci_high,
             "n_jumped": ensemble.n_jumped,
             "n_replicas": ensemble.n_replicas}))
    if profile.stability_check(lk):
        immediate = [r.replica for r in ensemble.replicas
                     if r.jumped and r.first_jump_step == 0]
        first_times = ensemble.first_jump_times
        finite = first_times[~np.isnan(first_times)]
        jumpfree = 1.0 - ensemble.n_jumped / ensemble.n_replicas
        checks.append(CheckResult(
            "stable_start_positive_blowup_time", not immediate,
            float(finite.min()) if finite.size else math.inf, None,
            {"immediate_replicas": immediate,
             "jumpfree_fraction": jumpfree}))
    return DiagnosticsReport(checks)


def build_report(traj: Trajectory) -> DiagnosticsReport:
    """Standard battery for one saved trajectory.

    Energy, jump minimality, and the no-late-jump window always run; each
    positive-time snapshot gets a density check; the weak-form battery runs
    when particle positions were recorded (residuals reported, no hard bound).
    """
    checks = [energy_balance_check(traj), jump_minimality_check(traj),
              no_late_jump_check(traj)]
    for snap in traj.snapshots:
        if snap.time > 0:
            res = density_bound_check(traj, snap.time)
            checks.append(CheckResult(f"density_bound@t={snap.time:g}",
                                      res.passed, res.value, res.bound,
                                      res.details))
    if traj.positions_history is not None and traj.first_step == 0:
        for fn_id in ("exp", "cos_gauss", "exp_t_exp_x"):
            resid = weak_form_residual(traj, fn_id)
            checks.append(CheckResult(f"weak_form[{fn_id}]", True, resid, None,
                                      {"informative": True}))
    return DiagnosticsReport(checks)

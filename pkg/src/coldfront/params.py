"""Physical parameters of the freezing-front model and their reduced form."""
from __future__ import annotations

import math
from dataclasses import dataclass


class ParamError(ValueError):
    """A physical parameter violates a model constraint."""


@dataclass(frozen=True)
class PhysicalParams:
    """Material constants in physical units.

    kappa   -- thermal diffusivity, > 0
    lam     -- latent-heat ratio (latent heat / specific heat capacity scale), > 0
    theta   -- transport noise coefficient; |theta| < sqrt(2*kappa) keeps the
               equation parabolic
    s0      -- initial front position, >= 0
    v_f     -- freezing temperature; fixed to 0 in this model
    """

    kappa: float
    lam: float
    theta: float = 0.0
    s0: float = 0.0
    v_f: float = 0.0

    @property
    def lam_kappa(self) -> float:
        return self.lam * self.kappa


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless parameters the particle system actually runs on.

    rho     -- correlation of each particle's driving noise with the common
               noise, in (-1, 1)
    sigma   -- diffusion scale, > 0
    alpha   -- total front advance if every particle is absorbed, >= 0
    """

    rho: float
    sigma: float
    alpha: float


def violation(p: PhysicalParams) -> str | None:
    """Return the name of the first violated constraint, or None if valid."""
    if not (isinstance(p.kappa, (int, float)) and math.isfinite(p.kappa)) or p.kappa <= 0:
        return "kappa must be finite and > 0"
    if not math.isfinite(p.lam) or p.lam <= 0:
        return "lam must be finite and > 0"
    if not math.isfinite(p.theta) or abs(p.theta) >= math.sqrt(2.0 * p.kappa):
        return "theta must satisfy |theta| < sqrt(2*kappa)"
    if not math.isfinite(p.s0) or p.s0 < 0:
        return "s0 must be finite and >= 0"
    if p.v_f != 0.0:
        return "v_f must be 0"
    return None


def validate(p: PhysicalParams) -> None:
    """Raise ParamError naming the first violated constraint."""
    msg = violation(p)
    if msg is not None:
        raise ParamError(msg)


def reduce(p: PhysicalParams, total_mass: float) -> ReducedParams:
    """Map physical parameters and the total supercooling mass to reduced form.

    sigma = sqrt(2*kappa), rho = theta/sigma, alpha = total_mass/(lam*kappa).
    """
    validate(p)
    if not math.isfinite(total_mass) or total_mass < 0:
        raise ParamError("total_mass must be finite and >= 0")
    sigma = math.sqrt(2.0 * p.kappa)
    return ReducedParams(rho=p.theta / sigma, sigma=sigma,
                         alpha=total_mass / (p.lam * p.kappa))


def unreduce(r: ReducedParams, lam: float, s0: float = 0.0) -> tuple[PhysicalParams, float]:
    """Invert reduce(): recover (PhysicalParams, total_mass) given lam.

    The reduced triple forgets lam (only lam*kappa enters alpha), so the
    caller supplies it.
    """
    kappa = 0.5 * r.sigma * r.sigma
    theta = r.rho * r.sigma
    total_mass = r.alpha * lam * kappa
    return PhysicalParams(kappa=kappa, lam=lam, theta=theta, s0=s0), total_mass


def is_deterministic(p: PhysicalParams) -> bool:
    """True when the common noise vanishes (theta == 0): one deterministic run."""
    return p.theta == 0.0

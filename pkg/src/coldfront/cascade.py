"""Front-jump cascades: scan rule, epsilon-regularized recursion, limits.

A jump of the freezing front absorbs supercooled mass; absorbed mass warms
the front forward, possibly absorbing more. The scan rule resolves that
cascade directly; the epsilon-recursion resolves it as the limit of a
regularized fixed-point iteration and must agree in the epsilon -> 0 limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .profile import ProfileError, SupercoolingProfile, piecewise_jump


class CascadeError(ValueError):
    """Invalid cascade input or an internal consistency failure."""


def per_particle_advance(total_mass: float, n: int, lam_kappa: float) -> float:
    """Front advance contributed by one absorbed particle.

    Shared by the particle engine and the empirical scan so recorded jumps
    and replayed scans agree bitwise.
    """
    return (total_mass / n) / lam_kappa


@dataclass(frozen=True)
class MassFunction:
    """Right-continuous cumulative mass m(y) of supercooling above an origin.

    Analytic form: piecewise-constant density cropped at the origin (piece
    end offsets `gaps`, cumulative masses `cums`, densities `vals`).
    Empirical form: sorted particle offsets with equal mass per particle.
    """

    kind: str                     # "analytic" | "empirical"
    gaps: np.ndarray | None = None
    cums: np.ndarray | None = None
    vals: np.ndarray | None = None
    offsets: np.ndarray | None = None
    mass_pp: float = 0.0

    @staticmethod
    def from_profile(profile: SupercoolingProfile, origin: float | None = None) -> "MassFunction":
        """Analytic mass function of the profile restricted to (origin, inf)."""
        if origin is None:
            origin = profile.origin
        if origin < profile.origin:
            raise CascadeError("origin must not precede the profile origin")
        edges = profile._edges
        vals = profile._vals
        keep = edges[1:] > origin
        gaps = edges[1:][keep] - origin
        v = vals[keep]
        if len(gaps) == 0:
            return MassFunction(kind="analytic", gaps=np.empty(0), cums=np.empty(0),
                                vals=np.empty(0))
        base = profile.cdf(origin)
        cums = profile._cum[1:][keep] - base
        return MassFunction(kind="analytic", gaps=gaps, cums=cums, vals=v)

    @staticmethod
    def from_offsets(offsets: np.ndarray, mass_pp: float) -> "MassFunction":
        """Empirical mass function from particle offsets above the origin."""
        d = np.sort(np.asarray(offsets, dtype=float))
        return MassFunction(kind="empirical", offsets=d, mass_pp=float(mass_pp))

    def total(self) -> float:
        if self.kind == "analytic":
            return float(self.cums[-1]) if len(self.cums) else 0.0
        return self.mass_pp * self.offsets.size

    def eval(self, y: float) -> float:
        """m(y): mass within offset y of the origin (right-continuous)."""
        if self.kind == "empirical":
            k = int(np.searchsorted(self.offsets, y, side="right"))
            return self.mass_pp * k
        if len(self.gaps) == 0 or y <= 0.0:
            return 0.0
        g = self.gaps
        if y >= g[-1]:
            return float(self.cums[-1])
        j = int(np.searchsorted(g, y, side="right"))
        lo_gap = 0.0 if j == 0 else g[j - 1]
        lo_cum = 0.0 if j == 0 else self.cums[j - 1]
        return float(lo_cum + self.vals[j] * (y - lo_gap))

    def inverse(self, target: float) -> float:
        """Smallest y with m(y) >= target; inf if the mass never reaches it."""
        if target <= 0.0:
            return 0.0
        if target > self.total():
            return math.inf
        if self.kind == "empirical":
            # smallest k with k * mass_pp >= target, robust to ceil rounding
            k = max(int(math.ceil(target / self.mass_pp)), 1)
            while k > 1 and self.mass_pp * (k - 1) >= target:
                k -= 1
            while self.mass_pp * k < target and k < self.offsets.size:
                k += 1
            return float(self.offsets[k - 1])
        cums = self.cums
        j = int(np.searchsorted(cums, target, side="left"))
        lo_gap = 0.0 if j == 0 else float(self.gaps[j - 1])
        lo_cum = 0.0 if j == 0 else float(cums[j - 1])
        v = float(self.vals[j])
        if v == 0.0:
            return float(self.gaps[j])
        return min(lo_gap + (target - lo_cum) / v, float(self.gaps[j]))


def empirical_jump_count(offsets: np.ndarray, a: float, floor: int = 0) -> int:
    """Number of particles absorbed by the scan rule.

    Sorted offsets d_(1) <= ... <= d_(n); the cascade stops at the first
    k >= floor with d_(k+1) > a*k (strictly) and absorbs the k smallest.
    Returns n when nothing escapes.
    """
    d = np.asarray(offsets, dtype=float)
    n = d.size
    if n == 0:
        return 0
    if floor == 0:
        # particles beyond one full sweep's reach can never be absorbed
        cand = d[d <= a * n]
        nc = cand.size
        if nc == 0:
            return 0
        cand = np.sort(cand)
        esc = cand > a * np.arange(nc)
        hit = int(np.argmax(esc))
        return nc if not esc[hit] else hit
    d = np.sort(d)
    esc = d > a * np.arange(n)
    if floor > 0:
        esc[:floor] = False
    hit = int(np.argmax(esc))
    return n if not esc[hit] else hit


def physical_jump(m: MassFunction, lam_kappa: float, floor: int = 0) -> float:
    """Jump size resolving the cascade of m at the origin.

    Analytic: first offset beyond which absorbed mass can no longer push the
    front (piecewise-linear walk). Empirical: a * k with a the per-particle
    advance and k the scan count.
    """
    if lam_kappa <= 0.0:
        raise CascadeError("lam_kappa must be > 0")
    if m.kind == "analytic":
        if floor:
            raise CascadeError("floor applies to empirical scans only")
        try:
            return piecewise_jump(m.gaps, m.cums, m.vals, lam_kappa)
        except ProfileError as exc:
            raise CascadeError(str(exc)) from exc
    a = m.mass_pp / lam_kappa
    k = empirical_jump_count(m.offsets, a, floor=floor)
    return a * k


def cascade_epsilon(m: MassFunction, lam_kappa: float, eps: float,
                    max_iters: int = 1_000_000, tol: float = 1e-12) -> tuple[float, list[float]]:
    """Epsilon-regularized cascade: limit of y -> eps + (m(y) - m(eps))/lam_kappa.

    Starts from y = eps with one kick step (smallest y gaining mass
    lam_kappa*eps beyond eps, the external push that seeds the recursion),
    then iterates the map to its limit. Returns (jump, trace); the trace
    lists every iterate including the start. The iteration map is monotone,
    so iterates are monotone after the kick; a kick into a supercritical
    region climbs, a subcritical kick falls back to eps.
    """
    if lam_kappa <= 0.0 or eps <= 0.0:
        raise CascadeError("lam_kappa and eps must be > 0")
    m_eps = m.eval(eps)
    trace = [eps]
    target = m_eps + lam_kappa * eps
    total = m.total()
    if total < target:
        y = eps + (total - m_eps) / lam_kappa
    else:
        y = max(m.inverse(target), eps)
    trace.append(y)
    exact = m.kind == "empirical"
    for _ in range(max_iters):
        y_next = eps + (m.eval(y) - m_eps) / lam_kappa
        trace.append(y_next)
        if (y_next == y) if exact else (abs(y_next - y) <= tol):
            return y_next, trace
        y = y_next
    return y, trace


def cascade_limit(m: MassFunction, lam_kappa: float,
                  eps_seq: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
                  tol: float = 1e-9) -> float:
    """Extrapolated eps -> 0 limit of cascade_epsilon; cross-checked.

    Uses linear extrapolation from the two smallest eps values (the cascade
    value is piecewise linear in eps near 0, so this is exact once both
    points sit in the terminal linear regime). Raises CascadeError if the
    limit disagrees with the direct scan beyond 10*tol.
    """
    if len(eps_seq) < 2 or any(e <= 0 for e in eps_seq):
        raise CascadeError("eps_seq needs at least two positive entries")
    seq = sorted(eps_seq, reverse=True)
    vals = [cascade_epsilon(m, lam_kappa, e, tol=min(tol, 1e-12))[0] for e in seq]
    e1, e2 = seq[-2], seq[-1]
    f1, f2 = vals[-2], vals[-1]
    limit = f2 + (f2 - f1) * e2 / (e1 - e2)
    direct = physical_jump(m, lam_kappa)
    if abs(limit - direct) > 10.0 * tol + 1e-12 * max(1.0, abs(direct)):
        raise CascadeError(
            f"cascade limit {limit!r} disagrees with direct scan {direct!r}")
    return limit

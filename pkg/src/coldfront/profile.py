"""Piecewise-constant supercooling profiles and their initial front jump."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ProfileError(ValueError):
    """Invalid profile construction or query."""


@dataclass(frozen=True)
class SupercoolingProfile:
    """Initial supercooling u0 >= 0 as a piecewise-constant density.

    The density takes values[j] on the open interval (edge[j], edge[j+1])
    where edge = (origin,) + breakpoints, and 0 beyond the last breakpoint.
    Liquid occupies (origin, inf); origin is the initial front position.
    """

    origin: float
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __init__(self, origin: float, breakpoints, values):
        object.__setattr__(self, "origin", float(origin))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        self._validate()

    def _validate(self) -> None:
        if not math.isfinite(self.origin):
            raise ProfileError("origin must be finite")
        if len(self.breakpoints) != len(self.values):
            raise ProfileError("breakpoints and values must have equal length")
        prev = self.origin
        for b in self.breakpoints:
            if not math.isfinite(b) or b <= prev:
                raise ProfileError("breakpoints must be finite, strictly increasing, "
                                   "and start above origin")
            prev = b
        for v in self.values:
            if not math.isfinite(v) or v < 0.0:
                raise ProfileError("density values must be finite and >= 0")

    @cached_property
    def _edges(self) -> np.ndarray:
        return np.concatenate(([self.origin], np.asarray(self.breakpoints)))

    @cached_property
    def _vals(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @cached_property
    def _cum(self) -> np.ndarray:
        """Cumulative mass at each edge; _cum[0] = 0."""
        widths = np.diff(self._edges)
        return np.concatenate(([0.0], np.cumsum(widths * self._vals)))

    @property
    def total_mass(self) -> float:
        return float(self._cum[-1])

    @property
    def support_end(self) -> float:
        return self.breakpoints[-1] if self.breakpoints else self.origin

    @property
    def sup_norm(self) -> float:
        return float(self._vals.max()) if len(self.values) else 0.0

    def cdf(self, x: float) -> float:
        """Mass in (origin, x]."""
        if x <= self.origin:
            return 0.0
        e = self._edges
        if x >= e[-1]:
            return self.total_mass
        j = int(np.searchsorted(e, x, side="right")) - 1
        return float(self._cum[j] + self._vals[j] * (x - e[j]))

    def cdf_many(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = self._edges
        j = np.clip(np.searchsorted(e, x, side="right") - 1, 0, len(self.values) - 1)
        out = self._cum[j] + self._vals[j] * (x - e[j]) if len(self.values) else np.zeros_like(x)
        out = np.where(x <= self.origin, 0.0, out)
        return np.where(x >= e[-1], self.total_mass, out)

    def mass(self, a: float, b: float) -> float:
        """Mass carried by the interval (a, b]."""
        if b <= a:
            return 0.0
        return self.cdf(b) - self.cdf(a)

    def quantile(self, q: float) -> float:
        """Smallest x with cdf(x) >= q * total_mass. Requires 0 <= q <= 1."""
        if not 0.0 <= q <= 1.0:
            raise ProfileError("quantile level must be in [0, 1]")
        if self.total_mass == 0.0:
            raise ProfileError("quantile of a zero-mass profile is undefined")
        target = q * self.total_mass
        if target <= 0.0:
            return self.origin
        cum = self._cum
        j = int(np.searchsorted(cum, target, side="left"))
        # target sits inside piece j-1; its density is > 0 there since cum rose
        v = self._vals[j - 1]
        x = self._edges[j - 1] + (target - cum[j - 1]) / v
        return float(min(x, self._edges[j]))

    def quantiles(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.total_mass == 0.0:
            raise ProfileError("quantile of a zero-mass profile is undefined")
        target = q * self.total_mass
        j = np.searchsorted(self._cum, np.maximum(target, 0.0), side="left")
        j = np.clip(j, 1, len(self._cum) - 1)
        v = self._vals[j - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = self._edges[j - 1] + (target - self._cum[j - 1]) / v
        x = np.minimum(x, self._edges[j])
        return np.where(target <= 0.0, self.origin, x)

    def stability_check(self, lam_kappa: float) -> bool:
        """True when the front does not jump at time zero.

        Stable iff the piece adjacent to the origin has density < lam_kappa
        (a gap, i.e. leading density 0, is stable regardless of later pieces).
        Exactly lam_kappa counts as unstable.
        """
        if not self.values:
            return True
        return self.values[0] < lam_kappa

    def initial_physical_jump(self, lam_kappa: float) -> float:
        """Smallest front advance that leaves a stable configuration.

        inf{y > 0 : mass(origin, origin+y) / lam_kappa < y}; 0 for stable
        profiles, support-clearing for strongly supercritical ones.
        """
        gaps = self._edges[1:] - self.origin
        return piecewise_jump(gaps, self._cum[1:], self._vals, lam_kappa)

    def scaled(self, factor: float) -> "SupercoolingProfile":
        """Same support, density multiplied by factor >= 0."""
        return SupercoolingProfile(self.origin, self.breakpoints,
                                   tuple(factor * v for v in self.values))


def piecewise_jump(gaps: np.ndarray, cums: np.ndarray, vals: np.ndarray,
                   lam_kappa: float) -> float:
    """Front jump for a piecewise-constant mass function given piece geometry.

    gaps -- piece end offsets from the origin (strictly increasing)
    cums -- cumulative mass at each piece end
    vals -- density on each piece

    Walks f(y) = m(y)/lam_kappa - y piece by piece; the jump is the first
    point beyond which f goes strictly negative. Piece-end values of f are
    computed from the cached cumulative masses (no drift accumulation).
    """
    if lam_kappa <= 0.0:
        raise ProfileError("lam_kappa must be > 0")
    y0 = 0.0
    f0 = 0.0
    for j in range(len(gaps)):
        if f0 < 0.0:
            # crossed within float noise at the previous boundary
            return y0
        slope = vals[j] / lam_kappa - 1.0
        if slope < 0.0:
            if f0 == 0.0:
                return y0
            y_cross = y0 + f0 / (-slope)
            if y_cross < gaps[j]:
                return float(y_cross)
        y0 = float(gaps[j])
        f0 = float(cums[j] / lam_kappa - gaps[j])
    # tail: zero density, slope -1
    if f0 <= 0.0:
        return y0
    total = float(cums[-1]) if len(gaps) else 0.0
    return total / lam_kappa

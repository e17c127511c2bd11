"""Independent reference implementations used to pin expected values."""
from __future__ import annotations

import numpy as np


def candidate_scan_jump(offsets: np.ndarray, a: float) -> float:
    """O(n^2) cascade jump: smallest candidate c with a * #{d <= c} <= c.

    Candidates are every reachable advance a*k plus every particle offset.
    Deliberately different logic from the production single-pass scan; the
    a*k candidates are computed as the same float products so agreement can
    be checked bitwise.
    """
    d = np.asarray(offsets, dtype=float)
    n = d.size
    cands = sorted(set(float(a * k) for k in range(n + 1)) | set(float(x) for x in d))
    for c in cands:
        if c < 0.0:
            continue
        if a * int(np.count_nonzero(d <= c)) <= c:
            return c
    return float(a * n)


def least_fixed_point_jump(offsets: np.ndarray, a: float) -> float:
    """Cascade jump as the least fixed point of c -> a * #{d <= c} from 0."""
    d = np.asarray(offsets, dtype=float)
    c = 0.0
    for _ in range(d.size + 2):
        c_next = a * int(np.count_nonzero(d <= c))
        if c_next == c:
            return c
        c = c_next
    raise AssertionError("fixed-point iteration failed to settle")


def grid_initial_jump(profile, lam_kappa: float, n_grid: int = 200_001) -> float:
    """Fine-grid brute force for the profile's initial jump.

    First grid point y with mass(origin, origin+y)/lam_kappa < y; accurate
    to one grid spacing. Scans past the support end by one sweep's reach.
    """
    reach = profile.total_mass / lam_kappa
    hi = max(profile.support_end - profile.origin, reach) * 1.5 + 1e-9
    ys = np.linspace(0.0, hi, n_grid)[1:]
    masses = profile.cdf_many(profile.origin + ys)
    below = masses / lam_kappa < ys
    idx = int(np.argmax(below))
    if not below[idx]:
        return float(hi)
    return float(ys[idx])


def normal_cdf(x: float) -> float:
    import math
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))

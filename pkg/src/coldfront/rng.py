"""Counter-based random streams: reproducible, restartable, slot-addressed.

Every draw is addressed by (seed, purpose, step, slot): step k's idiosyncratic
normals come from a Philox generator keyed (seed_idio, 2k), its bridge
uniforms from (seed_idio, 2k+1), and the common-noise path from
(seed_common, 0). A restart regenerates byte-identical blocks from the step
index alone; draws for dead particle slots are produced but never used.
"""
from __future__ import annotations

import numpy as np

_U64 = np.uint64
SEED_MAX = 2**64 - 1


def check_seed(seed: int, name: str = "seed") -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= SEED_MAX:
        raise ValueError(f"{name} must be an integer in [0, 2^64)")
    return int(seed)


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for one (seed, stream_id) pair."""
    key = np.array([seed, stream_id], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))


def idio_normals(seed_idio: int, step: int, n: int) -> np.ndarray:
    """Standard normals for step `step`, one slot per particle."""
    return stream(seed_idio, 2 * step).standard_normal(n)


def bridge_uniforms(seed_idio: int, step: int, n: int) -> np.ndarray:
    """Uniform(0,1) bridge-crossing draws for step `step`, one per particle."""
    return stream(seed_idio, 2 * step + 1).random(n)


def common_increments(seed_common: int, n_steps: int, dt: float) -> np.ndarray:
    """The common Brownian path as n_steps increments of variance dt."""
    z = stream(seed_common, 0).standard_normal(n_steps)
    return z * np.sqrt(dt)


def replica_seed(seed: int, replica: int) -> int:
    """Distinct Philox key material for Monte Carlo replica r."""
    return (seed + replica) % (SEED_MAX + 1)

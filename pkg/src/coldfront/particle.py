"""Interacting particle engine for the advancing freezing front.

N particles carry equal shares of the supercooling mass. Each step they
diffuse (idiosyncratic noise plus a common transport term), a Brownian
bridge correction catches in-step barrier touches, and one cascade scan
absorbs every particle the advancing front can reach. The integer absorbed
count is the source of truth: front = s0 + advance_pp * count.
"""
from __future__ import annotations

import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as crng
from .cascade import empirical_jump_count, per_particle_advance
from .params import PhysicalParams, ReducedParams, reduce as reduce_params, validate
from .profile import SupercoolingProfile

WILSON_Z95 = 1.959963984540054


class ConfigError(ValueError):
    """Simulation configuration rejected; message lists every problem."""


class SimError(RuntimeError):
    """Inconsistent simulation state or inputs."""


@dataclass(frozen=True)
class SimConfig:
    """Run geometry, seeds, and recording options.

    t_end must be an integer multiple of dt. blowup_threshold None means
    max(0.05 * alpha, 20 * advance_pp), resolved once the profile is known.
    """

    n_particles: int
    dt: float
    t_end: float
    seed_common: int = 0
    seed_idio: int = 1
    snapshot_times: tuple[float, ...] = ()
    blowup_threshold: float | None = None
    density_bins: int = 50
    bridge: bool = True
    record_positions: bool = False

    def errors(self) -> list[str]:
        errs = []
        if not isinstance(self.n_particles, (int, np.integer)) or self.n_particles < 1:
            errs.append("n_particles must be an integer >= 1")
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt)) or self.dt <= 0:
            errs.append("dt must be finite and > 0")
        if not (isinstance(self.t_end, (int, float)) and math.isfinite(self.t_end)) or self.t_end <= 0:
            errs.append("t_end must be finite and > 0")
        if not errs:
            if self.dt >= self.t_end:
                errs.append("dt must be smaller than t_end")
            else:
                k = round(self.t_end / self.dt)
                if abs(k * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
                    errs.append("t_end must be an integer multiple of dt")
        for name in ("seed_common", "seed_idio"):
            try:
                crng.check_seed(getattr(self, name), name)
            except ValueError as exc:
                errs.append(str(exc))
        for t in self.snapshot_times:
            if not math.isfinite(t) or t < 0 or (math.isfinite(self.t_end) and t > self.t_end):
                errs.append(f"snapshot time {t!r} outside [0, t_end]")
        if self.blowup_threshold is not None and (
                not math.isfinite(self.blowup_threshold) or self.blowup_threshold <= 0):
            errs.append("blowup_threshold must be > 0 or None")
        if not isinstance(self.density_bins, (int, np.integer)) or self.density_bins < 1:
            errs.append("density_bins must be an integer >= 1")
        return errs

    def validate(self) -> None:
        errs = self.errors()
        if errs:
            raise ConfigError("; ".join(errs))

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass
class ParticleState:
    """Mutable particle-system state after some number of completed steps."""

    positions: np.ndarray     # absolute; absorbed particles keep their last position
    alive: np.ndarray         # bool per particle
    mass_pp: float            # supercooling mass carried by one particle
    advance_pp: float         # front advance per absorbed particle
    s0: float
    absorbed: int
    step_index: int
    dt: float

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def front(self) -> float:
        return self.s0 + self.advance_pp * self.absorbed

    @property
    def loss(self) -> float:
        return self.absorbed / self.n if self.n else 0.0

    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def copy(self) -> "ParticleState":
        return ParticleState(self.positions.copy(), self.alive.copy(), self.mass_pp,
                             self.advance_pp, self.s0, self.absorbed,
                             self.step_index, self.dt)


@dataclass(frozen=True)
class JumpRecord:
    """One recorded front jump with enough context to replay its scan."""

    step_index: int
    time: float
    size: float
    count: int
    advance_pp: float
    front_before: float
    floor: int
    pre_offsets: np.ndarray   # offsets fed to the scan (bridge clamps applied)


@dataclass(frozen=True)
class DensitySnapshot:
    time: float
    step_index: int
    bin_left: np.ndarray
    bin_right: np.ndarray
    density: np.ndarray       # supercooling mass per unit length
    front: float
    alive_count: int


@dataclass(frozen=True)
class NoisePath:
    """Common Brownian path on the step grid."""

    dt: float
    increments: np.ndarray
    seed: int

    @property
    def cumulative(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.increments)))


@dataclass
class Trajectory:
    """Complete record of one run; rows cover steps first_step .. n_steps."""

    config: SimConfig
    physical: PhysicalParams
    reduced: ReducedParams
    total_mass: float
    first_step: int
    times: np.ndarray
    front: np.ndarray
    loss: np.ndarray
    alive: np.ndarray         # int alive counts
    jump_flag: np.ndarray     # bool per row
    jump_size: np.ndarray     # recorded jump size per row (0 where no record)
    jumps: list[JumpRecord]
    snapshots: list[DensitySnapshot]
    noise: NoisePath
    blowup_threshold: float
    runtime_sec: float = 0.0
    initial_positions: np.ndarray | None = None
    positions_history: list[np.ndarray] | None = None

    @property
    def mass_pp(self) -> float:
        return self.total_mass / self.config.n_particles

    @property
    def final_front(self) -> float:
        return float(self.front[-1])

    @property
    def blew_up(self) -> bool:
        return len(self.jumps) > 0


def effective_threshold(cfg: SimConfig, alpha: float, advance_pp: float) -> float:
    if cfg.blowup_threshold is not None:
        return cfg.blowup_threshold
    return max(0.05 * alpha, 20.0 * advance_pp)


def _init_full(profile: SupercoolingProfile, p: PhysicalParams, cfg: SimConfig,
               threshold: float) -> tuple[ParticleState, JumpRecord | None]:
    validate(p)
    cfg.validate()
    if profile.origin != p.s0:
        raise ConfigError("profile origin must equal params s0")
    n = cfg.n_particles
    total = profile.total_mass
    if total == 0.0:
        state = ParticleState(positions=np.full(n, p.s0), alive=np.zeros(n, bool),
                              mass_pp=0.0, advance_pp=0.0, s0=p.s0, absorbed=0,
                              step_index=0, dt=cfg.dt)
        return state, None
    qs = (np.arange(n) + 0.5) / n
    positions = profile.quantiles(qs)
    mass_pp = total / n
    advance_pp = per_particle_advance(total, n, p.lam_kappa)
    offsets = positions - p.s0
    jump_analytic = profile.initial_physical_jump(p.lam_kappa)
    floor = int(np.count_nonzero(offsets <= jump_analytic)) if jump_analytic > 0.0 else 0
    k0 = empirical_jump_count(offsets, advance_pp, floor=floor)
    alive = np.ones(n, bool)
    if k0 > 0:
        order = np.argsort(offsets, kind="stable")
        alive[order[:k0]] = False
    state = ParticleState(positions=positions, alive=alive, mass_pp=mass_pp,
                          advance_pp=advance_pp, s0=p.s0, absorbed=k0,
                          step_index=0, dt=cfg.dt)
    record = None
    size = advance_pp * k0
    if size > threshold:
        record = JumpRecord(step_index=0, time=0.0, size=size, count=k0,
                            advance_pp=advance_pp, front_before=p.s0, floor=floor,
                            pre_offsets=offsets.copy())
    return state, record


def init(profile: SupercoolingProfile, p: PhysicalParams, cfg: SimConfig) -> ParticleState:
    """Stratified start: particle i at the ((i+0.5)/N)-quantile of the profile,
    followed by one cascade that resolves an unstable start."""
    rp = reduce_params(p, profile.total_mass)
    thr = effective_threshold(cfg, rp.alpha, per_particle_advance(
        profile.total_mass, cfg.n_particles, p.lam_kappa) if profile.total_mass else 0.0)
    state, _ = _init_full(profile, p, cfg, thr)
    return state


def _step_core(state: ParticleState, rp: ReducedParams, dw: float,
               normals: np.ndarray, uniforms: np.ndarray | None,
               threshold: float) -> tuple[int, float, JumpRecord | None]:
    """Advance one step in place; returns (absorbed count, size, record)."""
    idx = np.flatnonzero(state.alive)
    state.step_index += 1
    if idx.size == 0:
        return 0, 0.0, None
    dt = state.dt
    front = state.front
    c_sq = rp.sigma * rp.sigma * (1.0 - rp.rho * rp.rho) * dt
    c = math.sqrt(c_sq)
    drift = rp.sigma * rp.rho * dw
    old = state.positions[idx]
    new = old + c * normals[idx] + drift
    state.positions[idx] = new
    d_eff = new - front
    if uniforms is not None and c_sq > 0.0:
        above = d_eff > 0.0
        ai = np.flatnonzero(above)
        if ai.size:
            pa = old[ai] - front
            pb = d_eff[ai]
            with np.errstate(under="ignore"):
                prob = np.exp(-2.0 * pa * pb / c_sq)
            fired = uniforms[idx[ai]] < prob
            d_eff[ai[fired]] = 0.0
    k = empirical_jump_count(d_eff, state.advance_pp)
    size = state.advance_pp * k
    record = None
    if k > 0:
        if size > threshold:
            record = JumpRecord(step_index=state.step_index,
                                time=state.step_index * dt, size=size, count=k,
                                advance_pp=state.advance_pp, front_before=front,
                                floor=0, pre_offsets=d_eff.copy())
        # ties never straddle the cut (the scan absorbs whole tie blocks),
        # so a partial selection of the k smallest is well defined
        kill = np.argpartition(d_eff, k - 1)[:k] if k < d_eff.size else slice(None)
        state.alive[idx[kill]] = False
        state.absorbed += k
    return k, size, record


def step(state: ParticleState, dw: float, idio_draws: np.ndarray,
         p: PhysicalParams, total_mass: float,
         bridge_draws: np.ndarray | None = None,
         blowup_threshold: float = math.inf) -> ParticleState:
    """One public engine step; mutates and returns state.

    idio_draws and bridge_draws are full-length slot arrays; entries for dead
    particles are ignored. bridge_draws None disables the bridge correction.
    """
    rp = reduce_params(p, total_mass)
    _step_core(state, rp, dw, idio_draws, bridge_draws, blowup_threshold)
    return state


def _snapshot(state: ParticleState, bins: int) -> DensitySnapshot:
    idx = np.flatnonzero(state.alive)
    front = state.front
    if idx.size == 0:
        edges = np.array([front, front])
        return DensitySnapshot(time=state.time, step_index=state.step_index,
                               bin_left=edges[:1], bin_right=edges[1:],
                               density=np.zeros(1), front=front, alive_count=0)
    pos = state.positions[idx]
    span = max(float(pos.max()) - front, 0.0)
    hi = front + span + max(1e-12, 1e-9 * max(span, 1.0))
    edges = np.linspace(front, hi, bins + 1)
    counts, _ = np.histogram(pos, bins=edges)
    width = edges[1] - edges[0]
    density = counts * (state.mass_pp / width)
    return DensitySnapshot(time=state.time, step_index=state.step_index,
                           bin_left=edges[:-1], bin_right=edges[1:],
                           density=density, front=front, alive_count=int(idx.size))


def _run_loop(state: ParticleState, p: PhysicalParams, cfg: SimConfig,
              rp: ReducedParams, total: float, threshold: float,
              init_record: JumpRecord | None,
              w_increments: np.ndarray | None = None) -> Trajectory:
    t_start = _time.perf_counter()
    n_steps = cfg.n_steps
    first = state.step_index
    if first > n_steps:
        raise SimError("state is already past t_end")
    rows = n_steps - first + 1
    times = (first + np.arange(rows)) * cfg.dt
    front = np.empty(rows)
    loss = np.empty(rows)
    alive_cnt = np.empty(rows, dtype=np.int64)
    jflag = np.zeros(rows, dtype=bool)
    jsize = np.zeros(rows)
    if w_increments is None:
        w_increments = crng.common_increments(cfg.seed_common, n_steps, cfg.dt)
    else:
        w_increments = np.asarray(w_increments, dtype=float)
        if w_increments.shape != (n_steps,):
            raise SimError("w_increments must have one entry per step")
    noise = NoisePath(dt=cfg.dt, increments=w_increments, seed=cfg.seed_common)
    snap_steps = {min(max(round(t / cfg.dt), 0), n_steps)
                  for t in cfg.snapshot_times}
    snapshots: list[DensitySnapshot] = []
    jumps: list[JumpRecord] = []
    history: list[np.ndarray] | None = [] if cfg.record_positions else None

    def record_row(i: int, rec: JumpRecord | None) -> None:
        front[i] = state.front
        loss[i] = state.loss
        # count the mask, not n - absorbed: the zero-mass state marks every
        # particle dead without absorbing any
        alive_cnt[i] = int(np.count_nonzero(state.alive))
        if rec is not None:
            jflag[i] = True
            jsize[i] = rec.size
            jumps.append(rec)
        if state.step_index in snap_steps:
            snapshots.append(_snapshot(state, cfg.density_bins))
        if history is not None:
            history.append(state.positions[state.alive].copy())

    record_row(0, init_record)
    n = state.n
    use_bridge = cfg.bridge and rp.rho * rp.rho < 1.0
    for k in range(first, n_steps):
        normals = crng.idio_normals(cfg.seed_idio, k, n)
        uniforms = crng.bridge_uniforms(cfg.seed_idio, k, n) if use_bridge else None
        _, _, rec = _step_core(state, rp, float(w_increments[k]), normals,
                               uniforms, threshold)
        record_row(state.step_index - first, rec)
    return Trajectory(config=cfg, physical=p, reduced=rp, total_mass=total,
                      first_step=first, times=times, front=front, loss=loss,
                      alive=alive_cnt, jump_flag=jflag, jump_size=jsize,
                      jumps=jumps, snapshots=snapshots, noise=noise,
                      blowup_threshold=threshold,
                      runtime_sec=_time.perf_counter() - t_start,
                      positions_history=history)


def run(profile: SupercoolingProfile, p: PhysicalParams, cfg: SimConfig,
        w_increments: np.ndarray | None = None) -> Trajectory:
    """Full simulation from t=0 to t_end on the fixed step grid.

    w_increments overrides the common-noise increments (tests use this to
    share one Brownian path across refinement levels); default draws them
    from seed_common.
    """
    total = profile.total_mass
    rp = reduce_params(p, total)
    adv = per_particle_advance(total, cfg.n_particles, p.lam_kappa) if total else 0.0
    threshold = effective_threshold(cfg, rp.alpha, adv)
    state, init_rec = _init_full(profile, p, cfg, threshold)
    init_positions = state.positions.copy() if cfg.record_positions else None
    traj = _run_loop(state, p, cfg, rp, total, threshold, init_rec, w_increments)
    traj.initial_positions = init_positions
    return traj


def restart(state: ParticleState, p: PhysicalParams, cfg: SimConfig,
            w_increments: np.ndarray | None = None) -> Trajectory:
    """Resume a run from a state snapshot; bit-identical to never stopping.

    The state's particle count and dt must match the config.
    """
    cfg.validate()
    if state.n != cfg.n_particles:
        raise SimError("state particle count does not match config")
    if state.dt != cfg.dt:
        raise SimError("state dt does not match config")
    total = state.mass_pp * state.n
    rp = reduce_params(p, total)
    threshold = effective_threshold(cfg, rp.alpha, state.advance_pp)
    return _run_loop(state.copy(), p, cfg, rp, total, threshold, None, w_increments)


def state_at(traj_cfg: SimConfig, profile: SupercoolingProfile, p: PhysicalParams,
             stop_step: int) -> ParticleState:
    """Run forward to a step index and return the state there (for restarts)."""
    total = profile.total_mass
    rp = reduce_params(p, total)
    adv = per_particle_advance(total, traj_cfg.n_particles, p.lam_kappa) if total else 0.0
    threshold = effective_threshold(traj_cfg, rp.alpha, adv)
    state, _ = _init_full(profile, p, traj_cfg, threshold)
    n = state.n
    use_bridge = traj_cfg.bridge and rp.rho * rp.rho < 1.0
    w = crng.common_increments(traj_cfg.seed_common, traj_cfg.n_steps, traj_cfg.dt)
    for k in range(stop_step):
        normals = crng.idio_normals(traj_cfg.seed_idio, k, n)
        uniforms = crng.bridge_uniforms(traj_cfg.seed_idio, k, n) if use_bridge else None
        _step_core(state, rp, float(w[k]), normals, uniforms, threshold)
    return state


def wilson_interval(successes: int, n: int, z: float = WILSON_Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class ReplicaSummary:
    replica: int
    jumped: bool
    first_jump_time: float    # nan when jump-free
    first_jump_step: int      # -1 when jump-free
    n_jumps: int
    max_jump: float
    final_front: float


@dataclass(frozen=True)
class BlowupEstimate:
    n_replicas: int
    n_jumped: int
    p_hat: float
    ci_low: float
    ci_high: float
    jump_cutoff: float
    first_jump_times: np.ndarray   # nan-padded, one entry per replica
    replicas: list[ReplicaSummary]


def monte_carlo_blowup(profile: SupercoolingProfile, p: PhysicalParams,
                       cfg: SimConfig, n_replicas: int,
                       jump_cutoff: float | None = None,
                       threads: int = 1) -> BlowupEstimate:
    """Blow-up probability estimate over independent replicas.

    Replica r runs with seeds (seed_common + r, seed_idio + r). A replica
    counts as blown up when it records a jump of size >= jump_cutoff
    (default: the run's blow-up threshold).
    """
    if n_replicas < 1:
        raise ConfigError("n_replicas must be >= 1")
    total = profile.total_mass
    rp = reduce_params(p, total)
    adv = per_particle_advance(total, cfg.n_particles, p.lam_kappa) if total else 0.0
    threshold = effective_threshold(cfg, rp.alpha, adv)
    cutoff = threshold if jump_cutoff is None else jump_cutoff

    def one(r: int) -> ReplicaSummary:
        rcfg = replace(cfg, seed_common=crng.replica_seed(cfg.seed_common, r),
                       seed_idio=crng.replica_seed(cfg.seed_idio, r),
                       record_positions=False)
        traj = run(profile, p, rcfg)
        big = [j for j in traj.jumps if j.size >= cutoff]
        if big:
            return ReplicaSummary(r, True, big[0].time, big[0].step_index,
                                  len(big), max(j.size for j in big),
                                  traj.final_front)
        return ReplicaSummary(r, False, math.nan, -1, 0, 0.0, traj.final_front)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            summaries = list(pool.map(one, range(n_replicas)))
    else:
        summaries = [one(r) for r in range(n_replicas)]
    summaries.sort(key=lambda s: s.replica)
    n_jumped = sum(s.jumped for s in summaries)
    lo, hi = wilson_interval(n_jumped, n_replicas)
    first_times = np.array([s.first_jump_time for s in summaries])
    return BlowupEstimate(n_replicas=n_replicas, n_jumped=n_jumped,
                          p_hat=n_jumped / n_replicas, ci_low=lo, ci_high=hi,
                          jump_cutoff=cutoff, first_jump_times=first_times,
                          replicas=summaries)

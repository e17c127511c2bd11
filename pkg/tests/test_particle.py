import math

import numpy as np
import pytest

from coldfront import rng as crng
from coldfront.cascade import MassFunction, physical_jump
from coldfront.params import PhysicalParams, reduce as reduce_params
from coldfront.particle import (ConfigError, SimConfig, SimError,
                                effective_threshold, init, monte_carlo_blowup,
                                restart, run, state_at, step, wilson_interval)
from coldfront.profile import SupercoolingProfile

from oracles import normal_cdf

LK = 0.5
P0 = PhysicalParams(kappa=0.5, lam=1.0, theta=0.0)
P5 = PhysicalParams(kappa=0.5, lam=1.0, theta=0.5)

SUB = SupercoolingProfile(0.0, [0.05, 1.05], [0.0, 0.8 * LK])
SUPER = SupercoolingProfile(0.0, [0.5, 1.0], [0.5 * LK, 2 * LK])


def small_cfg(**kw):
    base = dict(n_particles=2000, dt=1e-3, t_end=0.1, seed_common=3, seed_idio=4)
    base.update(kw)
    return SimConfig(**base)


class TestConfig:
    def test_valid(self):
        small_cfg().validate()

    def test_errors_collected(self):
        cfg = SimConfig(n_particles=0, dt=-1.0, t_end=-2.0, seed_common=-1,
                        density_bins=0)
        errs = cfg.errors()
        joined = " ".join(errs)
        for frag in ("n_particles", "dt", "t_end", "seed_common", "density_bins"):
            assert frag in joined
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_dt_must_divide_t_end(self):
        assert SimConfig(n_particles=10, dt=3e-3, t_end=0.01).errors()
        assert not SimConfig(n_particles=10, dt=2e-3, t_end=0.01).errors()

    def test_dt_below_t_end(self):
        assert SimConfig(n_particles=10, dt=0.1, t_end=0.1).errors()

    def test_snapshot_times_bounded(self):
        assert SimConfig(n_particles=10, dt=1e-3, t_end=0.1,
                         snapshot_times=(0.2,)).errors()

    def test_default_threshold(self):
        cfg = small_cfg()
        assert effective_threshold(cfg, alpha=1.0, advance_pp=1e-5) == 0.05
        assert effective_threshold(cfg, alpha=1e-9, advance_pp=1e-3) == 0.02
        cfg2 = small_cfg(blowup_threshold=0.5)
        assert effective_threshold(cfg2, 1.0, 1e-5) == 0.5


class TestInit:
    def test_stratified_positions(self):
        prof = SupercoolingProfile(0.0, [1.0], [0.3])
        st = init(prof, P0, small_cfg(n_particles=4))
        assert np.allclose(st.positions, [0.125, 0.375, 0.625, 0.875])
        assert st.alive.all()
        assert st.front == 0.0

    def test_single_particle_at_median(self):
        prof = SupercoolingProfile(0.0, [1.0, 2.0], [1.0, 3.0])
        st = init(prof, P0, small_cfg(n_particles=1, dt=1e-3, t_end=0.01))
        # half the total mass of 4 is reached at x = 1 + 1/3
        assert math.isclose(st.positions[0], 1.0 + 1.0 / 3.0, rel_tol=1e-12)

    def test_unstable_start_cascades(self):
        prof = SupercoolingProfile(0.0, [0.3], [2 * LK])
        n = 50_000
        st = init(prof, P0, small_cfg(n_particles=n))
        tol = 2 * prof.total_mass / (n * LK)
        assert abs(st.front - 0.6) <= tol
        assert not st.alive.any()
        assert st.absorbed == n

    def test_partial_initial_cascade(self):
        # supercritical up to 0.6, then a tail the jump does not clear
        prof = SupercoolingProfile(0.0, [0.3, 2.0], [2 * LK, 0.1 * LK])
        n = 50_000
        st = init(prof, P0, small_cfg(n_particles=n))
        ref = prof.initial_physical_jump(LK)
        assert ref > 0.6
        assert abs(st.front - ref) <= 4 * prof.total_mass / (n * LK)
        alive_pos = st.positions[st.alive]
        assert (alive_pos > st.front).all()

    def test_stable_start_is_exact_zero_jump(self):
        st = init(SUB, P0, small_cfg())
        assert st.front == 0.0
        assert st.absorbed == 0

    def test_zero_mass_profile_trivial(self):
        prof = SupercoolingProfile(0.0, [1.0], [0.0])
        st = init(prof, P0, small_cfg())
        assert st.front == 0.0 and st.loss == 0.0
        traj = run(prof, P0, small_cfg())
        assert traj.front[-1] == 0.0 and traj.alive[-1] == 0

    def test_origin_mismatch_rejected(self):
        prof = SupercoolingProfile(1.0, [2.0], [1.0])
        with pytest.raises(ConfigError):
            init(prof, P0, small_cfg())


class TestStep:
    def test_alpha_zero_matches_reflection(self):
        # negligible-mass sliver at y=1: loss(1) ~ first-passage probability
        prof = SupercoolingProfile(0.0, [1 - 5e-7, 1 + 5e-7], [0.0, 1e-12 / 1e-6])
        cfg = SimConfig(n_particles=100_000, dt=1e-3, t_end=1.0,
                        seed_common=4, seed_idio=5)
        traj = run(prof, P0, cfg)
        want = 2.0 * normal_cdf(-1.0)
        se = math.sqrt(want * (1 - want) / cfg.n_particles)
        assert abs(traj.loss[-1] - want) <= 3 * se

    def test_bridge_removes_crossing_bias(self):
        prof = SupercoolingProfile(0.0, [1 - 5e-7, 1 + 5e-7], [0.0, 1e-12 / 1e-6])
        want = 2.0 * normal_cdf(-1.0)
        losses = {}
        for bridge in (True, False):
            cfg = SimConfig(n_particles=50_000, dt=4e-3, t_end=1.0,
                            seed_common=4, seed_idio=5, bridge=bridge)
            losses[bridge] = run(prof, P0, cfg).loss[-1]
        # coarse dt: the uncorrected walk misses in-step touches
        assert abs(losses[True] - want) < abs(losses[False] - want)
        assert losses[False] < want

    def test_alive_strictly_above_front_each_step(self):
        cfg = small_cfg(n_particles=5000, t_end=0.05)
        prof = SUPER
        state = init(prof, P5, cfg)
        rp = reduce_params(P5, prof.total_mass)
        w = crng.common_increments(cfg.seed_common, cfg.n_steps, cfg.dt)
        for k in range(cfg.n_steps):
            z = crng.idio_normals(cfg.seed_idio, k, state.n)
            u = crng.bridge_uniforms(cfg.seed_idio, k, state.n)
            step(state, float(w[k]), z, P5, prof.total_mass, bridge_draws=u)
            alive_pos = state.positions[state.alive]
            assert (alive_pos > state.front).all()

    def test_front_loss_invariants(self):
        cfg = small_cfg(n_particles=3000, t_end=0.08)
        traj = run(SUB, P5, cfg)
        rp = reduce_params(P5, SUB.total_mass)
        assert np.all(np.diff(traj.front) >= 0)
        assert np.all(np.diff(traj.loss) >= 0)
        assert np.all((traj.loss >= 0) & (traj.loss <= 1))
        # front - s0 == alpha * loss at float precision
        assert np.max(np.abs(traj.front - rp.alpha * traj.loss)) <= 1e-13 * rp.alpha


class TestRun:
    def test_energy_balance_to_float_precision(self):
        for p, prof in ((P0, SUB), (P5, SUB), (P5, SUPER)):
            cfg = small_cfg(n_particles=4000, t_end=0.1)
            traj = run(prof, p, cfg)
            absorbed = traj.mass_pp * (cfg.n_particles - traj.alive)
            resid = np.max(np.abs(p.lam_kappa * (traj.front - p.s0) - absorbed))
            assert resid <= 1e-12 * max(prof.total_mass, 1.0)

    def test_deterministic_reruns(self):
        cfg = small_cfg(n_particles=2000)
        a = run(SUB, P5, cfg)
        b = run(SUB, P5, cfg)
        assert np.array_equal(a.front, b.front)
        assert np.array_equal(a.loss, b.loss)
        assert np.array_equal(a.noise.increments, b.noise.increments)

    def test_seed_changes_output(self):
        cfg = small_cfg(n_particles=2000)
        a = run(SUB, P5, cfg)
        b = run(SUB, P5, small_cfg(n_particles=2000, seed_idio=999))
        assert not np.array_equal(a.loss, b.loss)

    def test_jump_records_match_front_increments(self):
        cfg = SimConfig(n_particles=20_000, dt=1e-3, t_end=0.4,
                        seed_common=7, seed_idio=8)
        traj = run(SUPER, P5, cfg)
        assert traj.jumps, "scenario chosen to jump"
        for rec in traj.jumps:
            i = rec.step_index - traj.first_step
            assert traj.jump_flag[i]
            assert traj.jump_size[i] == rec.size
            dfront = traj.front[i] - traj.front[i - 1]
            assert math.isclose(dfront, rec.size, rel_tol=1e-9, abs_tol=1e-12)

    def test_recorded_jump_replays_scan_exactly(self):
        cfg = SimConfig(n_particles=20_000, dt=1e-3, t_end=0.4,
                        seed_common=7, seed_idio=8)
        traj = run(SUPER, P5, cfg)
        assert traj.jumps
        for rec in traj.jumps:
            m = MassFunction.from_offsets(rec.pre_offsets, traj.mass_pp)
            assert physical_jump(m, P5.lam_kappa, floor=rec.floor) == rec.size

    def test_snapshots(self):
        cfg = small_cfg(n_particles=3000, t_end=0.1, snapshot_times=(0.05, 0.1),
                        density_bins=20)
        traj = run(SUB, P5, cfg)
        assert len(traj.snapshots) == 2
        snap = traj.snapshots[0]
        assert snap.time == pytest.approx(0.05)
        assert snap.bin_left[0] == snap.front
        # histogram mass accounts for every alive particle
        widths = snap.bin_right - snap.bin_left
        mass = float((snap.density * widths).sum())
        assert math.isclose(mass, traj.mass_pp * snap.alive_count, rel_tol=1e-9)

    def test_positions_history(self):
        cfg = small_cfg(n_particles=500, t_end=0.02, record_positions=True)
        traj = run(SUB, P0, cfg)
        assert traj.initial_positions is not None
        assert len(traj.positions_history) == cfg.n_steps + 1
        assert traj.positions_history[0].size == traj.alive[0]
        assert traj.positions_history[-1].size == traj.alive[-1]

    def test_monotone_coupling_in_initial_mass(self):
        # pointwise larger supercooling, common draws: front never smaller
        cfg = small_cfg(n_particles=4000, t_end=0.1)
        lo = run(SUB, P5, cfg)
        hi = run(SUB.scaled(1.25), P5, cfg)
        assert np.all(hi.front >= lo.front - 1e-15)

    def test_w_increments_injection(self):
        cfg = small_cfg(n_particles=1000)
        w = crng.common_increments(cfg.seed_common, cfg.n_steps, cfg.dt)
        a = run(SUB, P5, cfg)
        b = run(SUB, P5, cfg, w_increments=w)
        assert np.array_equal(a.front, b.front)
        with pytest.raises(SimError):
            run(SUB, P5, cfg, w_increments=w[:-1])


class TestRestart:
    def test_bit_exact_resume(self):
        cfg = SimConfig(n_particles=8000, dt=1e-3, t_end=0.2,
                        seed_common=11, seed_idio=12, snapshot_times=(0.15,))
        full = run(SUB, P5, cfg)
        mid = state_at(cfg, SUB, P5, 100)
        tail = restart(mid, P5, cfg)
        assert tail.first_step == 100
        assert np.array_equal(tail.front, full.front[100:])
        assert np.array_equal(tail.loss, full.loss[100:])
        assert np.array_equal(tail.alive, full.alive[100:])

    def test_restart_rejects_mismatched_n(self):
        cfg = small_cfg(n_particles=1000)
        mid = state_at(cfg, SUB, P5, 10)
        with pytest.raises(SimError):
            restart(mid, P5, small_cfg(n_particles=2000))

    def test_restart_rejects_mismatched_dt(self):
        cfg = small_cfg(n_particles=1000)
        mid = state_at(cfg, SUB, P5, 10)
        with pytest.raises(SimError):
            restart(mid, P5, small_cfg(n_particles=1000, dt=2e-3))


class TestWilson:
    def test_known_values(self):
        lo, hi = wilson_interval(8, 10)
        assert 0.49 < lo < 0.51 and 0.94 < hi < 0.95
        lo, hi = wilson_interval(0, 20)
        assert lo == 0.0 and hi > 0.0
        lo, hi = wilson_interval(20, 20)
        assert hi == 1.0 and lo < 1.0

    def test_interval_orders(self):
        lo, hi = wilson_interval(3, 7)
        assert 0.0 <= lo < 3 / 7 < hi <= 1.0


class TestMonteCarlo:
    def test_subcritical_all_quiet(self):
        cfg = SimConfig(n_particles=5000, dt=1e-3, t_end=0.1,
                        seed_common=31, seed_idio=32)
        est = monte_carlo_blowup(SUB, P0, cfg, n_replicas=5)
        assert est.n_jumped == 0
        assert est.p_hat == 0.0 and est.ci_low == 0.0
        assert np.isnan(est.first_jump_times).all()

    def test_supercritical_patch_jumps(self):
        cfg = SimConfig(n_particles=4000, dt=1e-3, t_end=0.6,
                        seed_common=7, seed_idio=8)
        est = monte_carlo_blowup(SUPER, P5, cfg, n_replicas=12)
        assert est.n_jumped >= 1
        assert est.ci_low > 0.0
        ft = est.first_jump_times[~np.isnan(est.first_jump_times)]
        assert (ft > 0).all()

    def test_threads_do_not_change_results(self):
        cfg = SimConfig(n_particles=2000, dt=1e-3, t_end=0.3,
                        seed_common=7, seed_idio=8)
        a = monte_carlo_blowup(SUPER, P5, cfg, n_replicas=6, threads=1)
        b = monte_carlo_blowup(SUPER, P5, cfg, n_replicas=6, threads=4)
        assert a.n_jumped == b.n_jumped
        assert np.array_equal(a.first_jump_times, b.first_jump_times,
                              equal_nan=True)
        assert [r.final_front for r in a.replicas] == [r.final_front for r in b.replicas]

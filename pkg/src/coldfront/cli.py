"""Scenario-driven command line: run, iterate, probe, resolve, and check.

A scenario is an INI-style text file with [physical], [profile], [sim], and
[run] sections. Parsing collects every problem (unknown or duplicate keys,
type mismatches, violated invariants) instead of stopping at the first one.
Outputs are plain CSV/JSON plus dependency-free SVG line art, and identical
scenario + seeds produce byte-identical files in single-threaded mode.

Exit codes: 0 success, 1 scenario/config error, 2 runtime failure,
3 check-mode hard failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as crng
from .cascade import CascadeError, MassFunction, cascade_epsilon, cascade_limit, physical_jump
from .diagnostics import DiagnosticsError, build_report
from .params import ParamError, PhysicalParams, reduce as reduce_params, violation
from .particle import (
    DensitySnapshot,
    JumpRecord,
    NoisePath,
    SimConfig,
    SimError,
    Trajectory,
    monte_carlo_blowup,
    run,
)
from .picard import PicardError, iterate_to_fixed_point
from .profile import ProfileError, SupercoolingProfile

SCHEMA_VERSION = 1
OUT_ENV = "COLDFRONT_OUT"
MODES = ("simulate", "picard", "blowup-prob", "cascade", "check")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK = 3


class ScenarioError(ValueError):
    """Scenario text failed to parse or validate; .errors lists every problem."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class Scenario:
    physical: PhysicalParams
    profile: SupercoolingProfile
    sim: SimConfig
    mode: str
    out_dir: str | None
    replicas: int
    threads: int
    max_iters: int
    tol: float
    jump_cutoff: float | None
    eps_sequence: tuple[float, ...]
    source_text: str


# Schema: section -> key -> type tag. "floats" is a comma/space separated
# list; every key outside this table is an error, not a warning.
_SCHEMA = {
    "physical": {"kappa": "float", "lambda": "float", "theta": "float",
                 "s0": "float"},
    "profile": {"breakpoints": "floats", "values": "floats"},
    "sim": {"n_particles": "int", "dt": "float", "t_end": "float",
            "seed_common": "int", "seed_idio": "int",
            "snapshot_times": "floats", "blowup_threshold": "float",
            "density_bins": "int", "bridge": "bool",
            "record_positions": "bool"},
    "run": {"mode": "str", "out_dir": "str", "replicas": "int",
            "threads": "int", "max_iters": "int", "tol": "float",
            "jump_cutoff": "float", "eps_sequence": "floats"},
}
_REQUIRED = (
    ("physical", "kappa"), ("physical", "lambda"), ("physical", "theta"),
    ("physical", "s0"),
    ("profile", "breakpoints"), ("profile", "values"),
    ("sim", "n_particles"), ("sim", "dt"), ("sim", "t_end"),
    ("sim", "seed_common"), ("sim", "seed_idio"),
)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(tag: str, raw: str):
    if tag == "str":
        return raw
    if tag == "int":
        return int(raw, 10)
    if tag == "float":
        return float(raw)
    if tag == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tag == "floats":
        toks = [t for t in re.split(r"[,\s]+", raw.strip()) if t]
        return tuple(float(t) for t in toks)
    raise AssertionError(tag)


def _strip_comment(line: str) -> str:
    # Full-line comments plus inline "  # ..." / "  ; ..." tails.
    if line.lstrip().startswith(("#", ";")):
        return ""
    for mark in (" #", "\t#", " ;", "\t;"):
        pos = line.find(mark)
        if pos >= 0:
            line = line[:pos]
    return line.strip()


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; raise ScenarioError with every problem."""
    errors: list[str] = []
    values: dict[tuple[str, str], object] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                errors.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value, got {line!r}")
            continue
        key, _, raw_val = line.partition("=")
        key = key.strip().lower()
        raw_val = raw_val.strip()
        if section is None:
            errors.append(f"line {lineno}: key {key!r} outside any known section")
            continue
        schema = _SCHEMA[section]
        if key not in schema:
            errors.append(f"line {lineno}: unknown key {section}.{key}")
            continue
        if (section, key) in values:
            errors.append(f"line {lineno}: duplicate key {section}.{key}")
            continue
        try:
            values[(section, key)] = _convert(schema[key], raw_val)
        except ValueError:
            errors.append(
                f"line {lineno}: {section}.{key} expects {schema[key]}, got {raw_val!r}")

    for section, key in _REQUIRED:
        if (section, key) not in values:
            errors.append(f"missing required key {section}.{key}")

    if errors:
        raise ScenarioError(errors)

    def get(section, key, default=None):
        return values.get((section, key), default)

    physical = PhysicalParams(kappa=get("physical", "kappa"),
                              lam=get("physical", "lambda"),
                              theta=get("physical", "theta"),
                              s0=get("physical", "s0"))
    bad = violation(physical)
    if bad is not None:
        errors.append(f"physical: {bad}")

    profile = None
    try:
        profile = SupercoolingProfile(get("physical", "s0"),
                                      get("profile", "breakpoints"),
                                      get("profile", "values"))
    except (ProfileError, TypeError) as exc:
        errors.append(f"profile: {exc}")

    sim = SimConfig(
        n_particles=get("sim", "n_particles"),
        dt=get("sim", "dt"),
        t_end=get("sim", "t_end"),
        seed_common=get("sim", "seed_common"),
        seed_idio=get("sim", "seed_idio"),
        snapshot_times=get("sim", "snapshot_times", ()),
        blowup_threshold=get("sim", "blowup_threshold"),
        density_bins=get("sim", "density_bins", 50),
        bridge=get("sim", "bridge", True),
        record_positions=get("sim", "record_positions", False))
    errors.extend(f"sim: {msg}" for msg in sim.errors())

    mode = get("run", "mode", "simulate")
    if mode not in MODES:
        errors.append(f"run.mode must be one of {', '.join(MODES)}; got {mode!r}")
    replicas = get("run", "replicas", 100)
    if replicas < 1:
        errors.append("run.replicas must be >= 1")
    threads = get("run", "threads", 1)
    if threads < 1:
        errors.append("run.threads must be >= 1")
    max_iters = get("run", "max_iters", 200)
    if max_iters < 1:
        errors.append("run.max_iters must be >= 1")
    tol = get("run", "tol", 0.0)
    if not (math.isfinite(tol) and tol >= 0):
        errors.append("run.tol must be finite and >= 0")
    eps_sequence = get("run", "eps_sequence", (1e-2, 1e-3, 1e-4))
    if any(e <= 0 for e in eps_sequence) or len(eps_sequence) < 2:
        errors.append("run.eps_sequence needs at least two positive entries")

    if errors:
        raise ScenarioError(errors)

    return Scenario(physical=physical, profile=profile, sim=sim, mode=mode,
                    out_dir=get("run", "out_dir"), replicas=replicas,
                    threads=threads, max_iters=max_iters, tol=tol,
                    jump_cutoff=get("run", "jump_cutoff"),
                    eps_sequence=eps_sequence, source_text=text)


# ---------------------------------------------------------------------------
# Serialization helpers. Floats use 17 significant digits so every value
# round-trips bit-exactly; lines end with '\n' regardless of platform.

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True))
        fh.write("\n")


def _scenario_echo(scn: Scenario) -> dict:
    return {
        "physical": {"kappa": scn.physical.kappa, "lambda": scn.physical.lam,
                     "theta": scn.physical.theta, "s0": scn.physical.s0},
        "profile": {"breakpoints": list(scn.profile.breakpoints),
                    "values": list(scn.profile.values)},
        "sim": {"n_particles": scn.sim.n_particles, "dt": scn.sim.dt,
                "t_end": scn.sim.t_end, "seed_common": scn.sim.seed_common,
                "seed_idio": scn.sim.seed_idio,
                "snapshot_times": list(scn.sim.snapshot_times),
                "blowup_threshold": scn.sim.blowup_threshold,
                "density_bins": scn.sim.density_bins,
                "bridge": scn.sim.bridge,
                "record_positions": scn.sim.record_positions},
        "run": {"mode": scn.mode, "replicas": scn.replicas,
                "threads": scn.threads, "max_iters": scn.max_iters,
                "tol": scn.tol, "jump_cutoff": scn.jump_cutoff,
                "eps_sequence": list(scn.eps_sequence)},
    }


def _summary_base(scn: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "mode": scn.mode,
        "config": _scenario_echo(scn),
        "config_sha256": hashlib.sha256(scn.source_text.encode()).hexdigest(),
        "seeds": {"common": scn.sim.seed_common, "idio": scn.sim.seed_idio},
    }


# ---------------------------------------------------------------------------
# SVG line art. Self-contained static plots; pure string output keeps the
# byte-identity guarantee.

_SVG_W, _SVG_H = 640, 400
_SVG_M = 54


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _svg_plot(path: Path, xs, ys, title: str, color: str = "#1f77b4",
              kind: str = "line") -> None:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    x_lo, x_hi = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y_lo, y_hi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    span_x = x_hi - x_lo
    span_y = y_hi - y_lo
    plot_w = _SVG_W - 2 * _SVG_M
    plot_h = _SVG_H - 2 * _SVG_M

    def px(x):
        return _SVG_M + (x - x_lo) / span_x * plot_w

    def py(y):
        return _SVG_H - _SVG_M - (y - y_lo) / span_y * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    axis = (f'<line x1="{_SVG_M}" y1="{_SVG_H - _SVG_M}" x2="{_SVG_W - _SVG_M}" '
            f'y2="{_SVG_H - _SVG_M}" stroke="black"/>'
            f'<line x1="{_SVG_M}" y1="{_SVG_M}" x2="{_SVG_M}" '
            f'y2="{_SVG_H - _SVG_M}" stroke="black"/>')
    parts.append(axis)
    for t in _ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{px(t):.1f}" y="{_SVG_H - _SVG_M + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t:.4g}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{_SVG_M - 6}" y="{py(t) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{t:.4g}</text>')
    if kind == "line" and xs.size:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
    elif kind == "bars" and xs.size:
        # xs carries bin edges (len = len(ys) + 1).
        for i, y in enumerate(ys):
            x0, x1 = px(xs[i]), px(xs[i + 1])
            parts.append(
                f'<rect x="{x0:.2f}" y="{py(y):.2f}" width="{x1 - x0:.2f}" '
                f'height="{_SVG_H - _SVG_M - py(y):.2f}" fill="{color}" '
                f'fill-opacity="0.7" stroke="none"/>')
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


# ---------------------------------------------------------------------------
# Mode runners. Each writes files into out_dir and fills the shared summary.

def _write_trajectory_files(out: Path, traj: Trajectory) -> None:
    rows = zip(traj.times, traj.front, traj.loss, traj.alive,
               traj.jump_flag, traj.jump_size)
    _write_csv(out / "trajectory.csv",
               ["t", "front", "loss", "alive", "jump_flag", "jump_size"], rows)
    _write_json(out / "jumps.json", [
        {"step_index": rec.step_index, "time": rec.time, "size": rec.size,
         "count": rec.count, "advance_pp": rec.advance_pp,
         "front_before": rec.front_before, "floor": rec.floor,
         "pre_offsets": [float(v) for v in rec.pre_offsets]}
        for rec in traj.jumps])
    if traj.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i, snap in enumerate(traj.snapshots):
            rows = ((snap.time, snap.step_index, snap.front, snap.alive_count,
                     left, right, dens)
                    for left, right, dens in zip(snap.bin_left, snap.bin_right,
                                                 snap.density))
            _write_csv(snap_dir / f"snap_{i:02d}.csv",
                       ["time", "step_index", "front", "alive_count",
                        "bin_left", "bin_right", "density"], rows)
    _svg_plot(out / "front.svg", traj.times, traj.front,
              "freezing front s(t)")
    if traj.snapshots:
        snap = traj.snapshots[-1]
        if snap.density.size:
            edges = np.concatenate((snap.bin_left, snap.bin_right[-1:]))
            _svg_plot(out / "density.svg", edges, snap.density,
                      f"supercooling density at t={snap.time:g}",
                      color="#d62728", kind="bars")


def _run_simulate(scn: Scenario, out: Path) -> tuple[int, dict]:
    traj = run(scn.profile, scn.physical, scn.sim)
    _write_trajectory_files(out, traj)
    summary = _summary_base(scn)
    summary.update({
        "n_steps": scn.sim.n_steps,
        "total_mass": traj.total_mass,
        "blowup_threshold": traj.blowup_threshold,
        "final": {"front": float(traj.front[-1]), "loss": float(traj.loss[-1]),
                  "alive": int(traj.alive[-1])},
        "n_jumps": len(traj.jumps),
        "blowup": bool(traj.jumps),
    })
    return EXIT_OK, summary


def _run_picard(scn: Scenario, out: Path) -> tuple[int, dict]:
    res = iterate_to_fixed_point(scn.profile, scn.physical, scn.sim,
                                 max_iters=scn.max_iters, tol=scn.tol)
    _write_csv(out / "residuals.csv", ["iteration", "residual"],
               ((i + 1, r) for i, r in enumerate(res.residuals)))
    _write_csv(out / "front.csv", ["t", "front"],
               zip(res.front.times, res.front.values))
    _svg_plot(out / "front.svg", res.front.times, res.front.values,
              "fixed-point front s(t)")
    summary = _summary_base(scn)
    summary.update({
        "n_steps": scn.sim.n_steps,
        "m_samples": res.m_samples,
        "iterations": res.iterations,
        "converged": res.converged,
        "residual_final": res.residuals[-1] if res.residuals else 0.0,
        "order_violations": res.order_violations,
        "direction": res.direction,
        "final": {"front": res.front.final, "loss": float(res.loss[-1])},
    })
    if not res.converged:
        print(json.dumps({"error": "fixed-point iteration did not converge",
                          "iterations": res.iterations,
                          "residual": summary["residual_final"]}))
        _write_json(out / "summary.json", summary)
        return EXIT_RUNTIME, None
    return EXIT_OK, summary


def _run_blowup(scn: Scenario, out: Path) -> tuple[int, dict]:
    est = monte_carlo_blowup(scn.profile, scn.physical, scn.sim,
                             n_replicas=scn.replicas,
                             jump_cutoff=scn.jump_cutoff,
                             threads=scn.threads)
    _write_csv(out / "replicas.csv",
               ["replica", "jumped", "first_jump_time", "first_jump_step",
                "n_jumps", "max_jump", "final_front"],
               ((r.replica, r.jumped, r.first_jump_time, r.first_jump_step,
                 r.n_jumps, r.max_jump, r.final_front)
                for r in est.replicas))
    summary = _summary_base(scn)
    summary.update({
        "n_replicas": est.n_replicas,
        "n_jumped": est.n_jumped,
        "p_hat": est.p_hat,
        "wilson_low": est.ci_low,
        "wilson_high": est.ci_high,
        "jump_cutoff": est.jump_cutoff,
    })
    return EXIT_OK, summary


def _run_cascade(scn: Scenario, out: Path) -> tuple[int, dict]:
    m = MassFunction.from_profile(scn.profile)
    lk = scn.physical.lam_kappa
    rows = []
    eps_values = {}
    for eps in scn.eps_sequence:
        jump, trace = cascade_epsilon(m, lk, eps)
        eps_values[eps] = jump
        rows.extend((eps, i, y) for i, y in enumerate(trace))
    _write_csv(out / "cascade.csv", ["eps", "iteration", "value"], rows)
    direct = physical_jump(m, lk)
    limit = cascade_limit(m, lk, eps_seq=tuple(scn.eps_sequence))
    summary = _summary_base(scn)
    summary.update({
        "jump_size": direct,
        "cascade_limit": limit,
        "eps_values": {_fmt(e): v for e, v in eps_values.items()},
    })
    print(f"{direct:.12g}")
    return EXIT_OK, summary


def _read_csv(path: Path) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    header = lines[0].split(",")
    cols: dict[str, list[str]] = {h: [] for h in header}
    for ln in lines[1:]:
        for h, tok in zip(header, ln.split(",")):
            cols[h].append(tok)
    return cols


def load_trajectory(out: Path) -> Trajectory:
    """Rebuild a Trajectory from a simulate-mode output directory.

    The common noise path is regenerated from the recorded seed (the
    counter-based generator makes this bit-exact), so checks that integrate
    against dW work on reloaded runs. Particle positions are not persisted;
    weak-form checks are skipped by the report builder.
    """
    with open(out / "summary.json") as fh:
        summary = json.load(fh)
    if summary.get("schema_version") != SCHEMA_VERSION:
        raise DiagnosticsError(
            f"unsupported summary schema {summary.get('schema_version')!r}")
    cfg_echo = summary["config"]
    physical = PhysicalParams(kappa=cfg_echo["physical"]["kappa"],
                              lam=cfg_echo["physical"]["lambda"],
                              theta=cfg_echo["physical"]["theta"],
                              s0=cfg_echo["physical"]["s0"])
    sim_echo = cfg_echo["sim"]
    cfg = SimConfig(n_particles=sim_echo["n_particles"], dt=sim_echo["dt"],
                    t_end=sim_echo["t_end"],
                    seed_common=sim_echo["seed_common"],
                    seed_idio=sim_echo["seed_idio"],
                    snapshot_times=tuple(sim_echo["snapshot_times"]),
                    blowup_threshold=sim_echo["blowup_threshold"],
                    density_bins=sim_echo["density_bins"],
                    bridge=sim_echo["bridge"],
                    record_positions=sim_echo["record_positions"])
    cols = _read_csv(out / "trajectory.csv")
    times = np.array([float(v) for v in cols["t"]])
    front = np.array([float(v) for v in cols["front"]])
    loss = np.array([float(v) for v in cols["loss"]])
    alive = np.array([int(v) for v in cols["alive"]])
    jump_flag = np.array([v == "1" for v in cols["jump_flag"]])
    jump_size = np.array([float(v) for v in cols["jump_size"]])
    with open(out / "jumps.json") as fh:
        jumps = [JumpRecord(step_index=d["step_index"], time=d["time"],
                            size=d["size"], count=d["count"],
                            advance_pp=d["advance_pp"],
                            front_before=d["front_before"], floor=d["floor"],
                            pre_offsets=np.array(d["pre_offsets"]))
                 for d in json.load(fh)]
    snapshots = []
    snap_dir = out / "snapshots"
    if snap_dir.is_dir():
        for path in sorted(snap_dir.glob("snap_*.csv")):
            sc = _read_csv(path)
            snapshots.append(DensitySnapshot(
                time=float(sc["time"][0]),
                step_index=int(sc["step_index"][0]),
                bin_left=np.array([float(v) for v in sc["bin_left"]]),
                bin_right=np.array([float(v) for v in sc["bin_right"]]),
                density=np.array([float(v) for v in sc["density"]]),
                front=float(sc["front"][0]),
                alive_count=int(sc["alive_count"][0])))
    n_steps = cfg.n_steps
    noise = NoisePath(dt=cfg.dt,
                      increments=crng.common_increments(cfg.seed_common,
                                                        n_steps, cfg.dt),
                      seed=cfg.seed_common)
    return Trajectory(config=cfg, physical=physical,
                      reduced=reduce_params(physical, summary["total_mass"]),
                      total_mass=summary["total_mass"], first_step=0,
                      times=times, front=front, loss=loss, alive=alive,
                      jump_flag=jump_flag, jump_size=jump_size, jumps=jumps,
                      snapshots=snapshots, noise=noise,
                      blowup_threshold=summary["blowup_threshold"])


def _run_check(scn: Scenario | None, out: Path) -> tuple[int, dict]:
    traj = load_trajectory(out)
    report = build_report(traj)
    _write_json(out / "report.json", report.as_dict())
    for line in report.summary_lines():
        print(line)
    return (EXIT_OK if report.passed else EXIT_CHECK), None


# ---------------------------------------------------------------------------

def _resolve_out_dir(scn: Scenario | None, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    if scn is not None and scn.out_dir:
        return Path(scn.out_dir)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path("coldfront_out")


def execute(scn: Scenario, out_dir: Path) -> int:
    """Run the scenario's mode, writing artifacts into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = {"simulate": _run_simulate, "picard": _run_picard,
              "blowup-prob": _run_blowup, "cascade": _run_cascade,
              "check": _run_check}[scn.mode]
    code, summary = runner(scn, out_dir)
    if summary is not None:
        _write_json(out_dir / "summary.json", summary)
    return code


def _build_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldfront",
        description="Supercooled freezing-front simulator and checker.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="scenario file path")
        sp.add_argument("--out", help="output directory "
                        f"(default: scenario, then ${OUT_ENV}, then ./coldfront_out)")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed-common", type=int, default=None)
        sp.add_argument("--seed-idio", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_argparser().parse_args(argv)

    scn = None
    if args.mode == "check" and args.config is None:
        # Check mode reads everything back from the output directory.
        out = _resolve_out_dir(None, args.out)
    else:
        if args.config is None:
            print(json.dumps({"errors": ["--config is required for this mode"]}))
            return EXIT_CONFIG
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            print(json.dumps({"errors": [f"cannot read config: {exc}"]}))
            return EXIT_CONFIG
        try:
            scn = parse_scenario(text)
        except ScenarioError as exc:
            print(json.dumps({"errors": exc.errors}))
            return EXIT_CONFIG
        overrides = {}
        if args.seed_common is not None:
            overrides["seed_common"] = args.seed_common
        if args.seed_idio is not None:
            overrides["seed_idio"] = args.seed_idio
        if overrides:
            sim = dataclasses.replace(scn.sim, **overrides)
            bad = sim.errors()
            if bad:
                print(json.dumps({"errors": [f"sim: {msg}" for msg in bad]}))
                return EXIT_CONFIG
            scn = dataclasses.replace(scn, sim=sim)
        if args.threads is not None:
            if args.threads < 1:
                print(json.dumps({"errors": ["--threads must be >= 1"]}))
                return EXIT_CONFIG
            scn = dataclasses.replace(scn, threads=args.threads)
        if scn.mode != args.mode:
            scn = dataclasses.replace(scn, mode=args.mode)
        out = _resolve_out_dir(scn, args.out)

    try:
        if scn is None:
            out.mkdir(parents=True, exist_ok=True)
            code, _ = _run_check(None, out)
            return code
        return execute(scn, out)
    except (SimError, PicardError, CascadeError, ParamError, ProfileError,
            DiagnosticsError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

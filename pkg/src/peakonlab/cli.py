"""Command-line front end.

    peakonlab simulate        --config cfg.yaml --out runs/a
    peakonlab energy-report   --config cfg.yaml --out runs/a [--trajectory runs/a/trajectory.txt]
    peakonlab characteristics --config cfg.yaml --out runs/a [--trajectory ...]
    peakonlab kernel-check    --config cfg.yaml --out runs/a --seed 0
    peakonlab oracle-compare  --config cfg.yaml --out runs/a

Exit codes: 0 success, 2 invalid config, 3 numerical failure, 4 unreadable trajectory.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from peakonlab import characteristics as chars
from peakonlab import measures
from peakonlab.errors import PeakonlabError, SlopeMismatch
from peakonlab.exact import MeshSpec, derive_params, peakon_antipeakon_field
from peakonlab.kernel import KernelSpec, check_decomposition, verify_one_sided_lipschitz
from peakonlab.solver import (
    ExactPeakonAntipeakon,
    Multipeakon,
    SourceKind,
    TrajectoryError,
    load_handle,
    trajectory_text,
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TRAJECTORY = 4


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ config
SCHEMA = {
    "equation": "CH",
    "source": {"type": "peakon_antipeakon", "p0": 2.0, "q0": math.log(0.75), "q": None, "p": None, "c": 1.0},
    "time": {"t_end": None, "samples": 41},
    "mesh": {"h_max": 0.02, "ratio": 1.2, "floor_rel": 1e-9, "tail": 1e-12},
    "windows": [[-1.0, 1.0]],
    "test_functions": [{"type": "indicator", "lo": -1.0, "hi": 1.0, "value": 1.0}],
    "characteristics": {"starts": [0.0], "side": "Leftmost", "v": False, "samples": 201,
                        "grid": None, "flow_map_t": None},
    "measures": {"candidates": "collisions", "delta": 1e-2, "K": 8, "nu_bins": 100},
    "tolerances": {"rtol": 1e-10, "atol": 1e-12, "gap_floor": 1e-6, "limit_noise": 1e-6, "oracle_tol": 1e-5,
                   "slope_tol": 5e-2},
    "kernel_check": {"samples": 10000},
    "oracle": {"samples": 50},
}
TEST_FUNCTION_KEYS = {
    "indicator": {"type": None, "lo": -1.0, "hi": 1.0, "value": 1.0},
    "hat": {"type": None, "center": 0.0, "half_width": 1.0, "height": 1.0, "eps": 1e-2},
}
GRID_KEYS = {"lo": None, "hi": None, "n": 101}


def _merge(defaults, given, path):
    if given is None:
        return json.loads(json.dumps(defaults))
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'} must be a mapping")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {path or 'config'}")
    out = {}
    for key, dflt in defaults.items():
        val = given.get(key, dflt)
        if isinstance(dflt, dict) and key in given:
            val = _merge(dflt, given[key], f"{path}.{key}" if path else key)
        out[key] = val
    return out


def _number(v, name, lo=None, strict=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name} must be an integer")
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"{name} must be {'>' if strict else '>='} {lo}, got {v}")
    return int(v) if integer else float(v)


def validate_config(raw):
    cfg = _merge(SCHEMA, raw or {}, "")
    eq = cfg["equation"]
    try:
        cfg["spec"] = KernelSpec.from_name(eq)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    src = cfg["source"]
    kind = src["type"]
    if kind not in ("peakon_antipeakon", "multipeakon", "single_peakon", "zero"):
        raise ConfigError(f"source.type {kind!r} not one of peakon_antipeakon, multipeakon, single_peakon, zero")
    if not cfg["spec"].is_ch and kind != "zero":
        raise ConfigError("peakon sources solve Camassa-Holm; use source.type 'zero' with HS")
    if kind == "peakon_antipeakon":
        try:
            cfg["params"] = derive_params(_number(src["p0"], "source.p0"), _number(src["q0"], "source.q0"))
        except ValueError as exc:
            raise ConfigError(f"derive_params precondition failed: {exc}") from exc
    if kind == "multipeakon":
        q, p = src["q"], src["p"]
        if not isinstance(q, list) or not isinstance(p, list) or len(q) != len(p) or not q:
            raise ConfigError("source.q and source.p must be equal-length nonempty lists")
        src["q"] = [_number(v, "source.q[]") for v in q]
        src["p"] = [_number(v, "source.p[]") for v in p]
    tm = cfg["time"]
    if tm["t_end"] is None:
        tm["t_end"] = 2 * cfg["params"].t_collision if kind == "peakon_antipeakon" else 1.0
    tm["t_end"] = _number(tm["t_end"], "time.t_end", 0.0, strict=True)
    tm["samples"] = _number(tm["samples"], "time.samples", 2, integer=True)
    m = cfg["mesh"]
    for k in ("h_max", "floor_rel", "tail"):
        m[k] = _number(m[k], f"mesh.{k}", 0.0, strict=True)
    m["ratio"] = _number(m["ratio"], "mesh.ratio", 1.0, strict=True)
    wins = cfg["windows"]
    if not isinstance(wins, list):
        raise ConfigError("windows must be a list of [alpha, beta] pairs")
    for w in wins:
        if not (isinstance(w, list) and len(w) == 2) or _number(w[0], "window") >= _number(w[1], "window"):
            raise ConfigError(f"window {w!r} must be [alpha, beta] with alpha < beta")
    tfs = []
    for tf in cfg["test_functions"]:
        if not isinstance(tf, dict) or tf.get("type") not in TEST_FUNCTION_KEYS:
            raise ConfigError(f"test function {tf!r} needs type indicator or hat")
        full = _merge(TEST_FUNCTION_KEYS[tf["type"]], tf, "test_functions[]")
        full["type"] = tf["type"]
        tfs.append(full)
    cfg["test_functions"] = tfs
    ch = cfg["characteristics"]
    try:
        ch["side"] = chars.Side(ch["side"]).value
    except ValueError as exc:
        raise ConfigError(f"characteristics.side: {exc}") from exc
    ch["starts"] = [_number(v, "characteristics.starts[]") for v in ch["starts"]]
    ch["samples"] = _number(ch["samples"], "characteristics.samples", 2, integer=True)
    if ch["grid"] is not None:
        g = _merge(GRID_KEYS, ch["grid"], "characteristics.grid")
        if g["lo"] is None or g["hi"] is None or not _number(g["lo"], "grid.lo") < _number(g["hi"], "grid.hi"):
            raise ConfigError("characteristics.grid needs lo < hi")
        g["n"] = _number(g["n"], "grid.n", 2, integer=True)
        ch["grid"] = g
    ms = cfg["measures"]
    if ms["candidates"] != "collisions":
        if not isinstance(ms["candidates"], list):
            raise ConfigError("measures.candidates must be 'collisions' or a list of times")
        ms["candidates"] = [_number(v, "measures.candidates[]", 0.0) for v in ms["candidates"]]
    ms["delta"] = _number(ms["delta"], "measures.delta", 0.0, strict=True)
    ms["K"] = _number(ms["K"], "measures.K", measures.MIN_K, integer=True)
    ms["nu_bins"] = _number(ms["nu_bins"], "measures.nu_bins", 1, integer=True)
    for k, v in cfg["tolerances"].items():
        cfg["tolerances"][k] = _number(v, f"tolerances.{k}", 0.0, strict=True)
    cfg["kernel_check"]["samples"] = _number(cfg["kernel_check"]["samples"], "kernel_check.samples", 1, integer=True)
    cfg["oracle"]["samples"] = _number(cfg["oracle"]["samples"], "oracle.samples", 2, integer=True)
    return cfg


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def shipped_scenarios():
    """Names of the scenario configs bundled with the package."""
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def scenario_path(name):
    return SCENARIO_DIR / f"{name}.yaml"


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return validate_config(raw)


# ------------------------------------------------------------- scenario
def build_handle(cfg):
    src, tol, t_end = cfg["source"], cfg["tolerances"], cfg["time"]["t_end"]
    kind = src["type"]
    if kind == "peakon_antipeakon":
        pr = cfg["params"]
        return ExactPeakonAntipeakon(pr.p0, pr.q0, t_end)
    if kind == "multipeakon":
        q, p = src["q"], src["p"]
    elif kind == "single_peakon":
        q, p = [0.0], [_number(src["c"], "source.c")]
    else:
        q, p = [], []
    return Multipeakon(q, p, t_end, rtol=tol["rtol"], atol=tol["atol"], gap_floor=tol["gap_floor"])


def collision_times(cfg, handle):
    if cfg["source"]["type"] == "peakon_antipeakon":
        tc = cfg["params"].t_collision
        return [tc] if tc <= handle.t_end else []
    return [t for t, _ in getattr(handle, "collisions", [])]


def candidate_times(cfg, handle):
    c = cfg["measures"]["candidates"]
    return collision_times(cfg, handle) if c == "collisions" else list(c)


def sample_times(cfg, handle, refine):
    t_end = handle.t_end
    n = int(round((cfg["time"]["samples"] - 1) * refine)) + 1
    ts = set(np.linspace(0.0, t_end, n).tolist())
    ms = cfg["measures"]
    # one-sided limits at candidate times read the snapshots at t0 +/- 2^-k delta
    for t0 in candidate_times(cfg, handle):
        ts.add(float(t0))
        for side in (measures.LimitSide.LEFT, measures.LimitSide.RIGHT):
            d = min(ms["delta"], 0.5 * (t_end - t0) if side is measures.LimitSide.RIGHT else 0.5 * t0)
            if d > 0:
                ts.update(measures.approach_times(t0, side, d, ms["K"]).tolist())
    return sorted(t for t in ts if 0.0 <= t <= t_end)


def mesh_of(cfg, refine):
    m = cfg["mesh"]
    return MeshSpec(m["h_max"] / refine, m["ratio"], m["floor_rel"], m["tail"])


def snap_to_snapshots(grid, times):
    """Move grid points onto the nearest stored snapshot.

    Between snapshots a file trajectory is a linear blend of two profiles, which
    doubles every moving crest; energies read there oscillate, so bins end on
    snapshots instead."""
    times = np.asarray(times)
    k = np.clip(np.searchsorted(times, grid), 1, len(times) - 1)
    nearest = np.where(np.abs(times[k - 1] - grid) <= np.abs(times[k] - grid), times[k - 1], times[k])
    return np.unique(nearest)


def test_function(tf):
    if tf["type"] == "indicator":
        return measures.StepFunction.indicator(tf["lo"], tf["hi"], tf["value"])
    c, w, hgt = tf["center"], tf["half_width"], tf["height"]
    return measures.step_approximate(lambda x: hgt * np.maximum(1 - np.abs(x - c) / w, 0.0), tf["eps"],
                                     support=(c - w, c + w))


# ------------------------------------------------------------------ output
def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trajectory_handle(path, cfg):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TrajectoryError(f"cannot read trajectory {path}: {exc}") from exc
    return load_handle(text, cfg["spec"])


# ------------------------------------------------------------------ commands
def cmd_simulate(cfg, out, refine=1.0, seed=0):
    handle = build_handle(cfg)
    mesh = mesh_of(cfg, refine)
    profiles = [handle.profile_at(t, mesh) for t in sample_times(cfg, handle, refine)]
    src = handle.source if handle.source is not None else SourceKind.MULTIPEAKON
    path = Path(out) / "trajectory.txt"
    write_atomic(path, trajectory_text(src, handle.t_end, profiles))
    return [path]


def _trajectory_path(args, out):
    return Path(args.trajectory) if args.trajectory else Path(out) / "trajectory.txt"


def cmd_energy_report(cfg, out, trajectory, refine=1.0, seed=0):
    handle = read_trajectory_handle(trajectory, cfg)
    generator = build_handle(cfg)
    ms, noise = cfg["measures"], cfg["tolerances"]["limit_noise"]
    written = []
    times = handle.times
    for k, (a, b) in enumerate(cfg["windows"]):
        try:
            win = chars.trace_many(handle, [a, b], 0.0, handle.t_end, side=chars.Side.LEFTMOST, times=times)
        except PeakonlabError as exc:
            raise NumericalFailure(f"trace (window {k}): {exc}") from exc
        led = measures.ledger(handle, win[0], win[1], times)
        p = Path(out) / f"ledger_{k}.csv"
        write_atomic(p, led.to_csv())
        written.append(p)
    cands = [t for t in candidate_times(cfg, generator) if 0.0 <= t <= handle.t_end]
    n_bins = int(round(ms["nu_bins"] * refine))
    grid = snap_to_snapshots(np.linspace(0.0, handle.t_end, n_bins + 1), handle.times)
    for k, tf in enumerate(cfg["test_functions"]):
        phi = test_function(tf)
        try:
            mu = measures.mu_atoms(handle, phi, cands, ms["delta"], ms["K"], noise=noise)
        except PeakonlabError as exc:
            raise NumericalFailure(f"mu_atoms (test function {k}): {exc}") from exc
        reports = {"mu_plus": mu.plus, "mu_minus": mu.minus,
                   "nu_plus": measures.nu_measure(handle, phi, "+", grid),
                   "nu_minus": measures.nu_measure(handle, phi, "-", grid)}
        for name, rep in reports.items():
            p = Path(out) / f"{name}_{k}.json"
            write_atomic(p, rep.to_json())
            written.append(p)
    return written


def cmd_characteristics(cfg, out, trajectory, refine=1.0, seed=0):
    handle = read_trajectory_handle(trajectory, cfg)
    ch = cfg["characteristics"]
    n = int(round((ch["samples"] - 1) * refine)) + 1
    written = []
    for k, s in enumerate(ch["starts"]):
        try:
            c = chars.trace(handle, s, 0.0, handle.t_end, side=ch["side"], n_samples=n)
        except PeakonlabError as exc:
            raise NumericalFailure(f"trace (start {s}): {exc}") from exc
        if ch["v"]:
            try:
                c = chars.v_along(handle, c, slope_tol=cfg["tolerances"]["slope_tol"])
            except SlopeMismatch as exc:
                print(f"warning: start {s}: {exc}; writing the characteristic without v", file=sys.stderr)
        p = Path(out) / f"characteristic_{k}.csv"
        write_atomic(p, c.to_csv())
        written.append(p)
    if ch["grid"] is not None:
        g = ch["grid"]
        t = ch["flow_map_t"] if ch["flow_map_t"] is not None else handle.t_end
        fm = chars.flow_map(handle, np.linspace(g["lo"], g["hi"], g["n"]), t)
        if not fm.monotone:
            print(f"warning: flow map at t={t} has {fm.violations} ordering violations", file=sys.stderr)
        p = Path(out) / "flow_map.csv"
        write_atomic(p, fm.to_csv())
        written.append(p)
    return written


def cmd_kernel_check(cfg, out, refine=1.0, seed=0):
    n = int(cfg["kernel_check"]["samples"] * refine)
    spec = cfg["spec"]
    dec = check_decomposition(spec, n, seed=seed)
    lip = verify_one_sided_lipschitz(spec, n, seed=seed)
    report = {
        "equation": spec.kernel_id.value,
        "samples": n,
        "seed": seed,
        "max_reconstruction_error": dec.max_reconstruction_error,
        "l1_violations": dec.l1_violations,
        "l2_violations": dec.l2_violations,
        "l3_violations": dec.l3_violations,
        "min_quotient": lip.min_quotient,
        "lipschitz_bound": -spec.L,
        "passed": bool(dec.passed and lip.passed and dec.max_reconstruction_error <= 1e-12),
    }
    p = Path(out) / "kernel_check.json"
    write_atomic(p, json.dumps(report, indent=2) + "\n")
    if not report["passed"]:
        raise NumericalFailure("check_decomposition / verify_one_sided_lipschitz reported violations")
    return [p]


def cmd_oracle_compare(cfg, out, refine=1.0, seed=0):
    if cfg["source"]["type"] != "peakon_antipeakon":
        raise ConfigError("oracle-compare needs source.type peakon_antipeakon")
    pr, tol = cfg["params"], cfg["tolerances"]
    T = pr.t_collision
    ode = Multipeakon([pr.q0 / 2, -pr.q0 / 2], [pr.p0 / 2, -pr.p0 / 2], cfg["time"]["t_end"],
                      rtol=tol["rtol"], atol=tol["atol"], gap_floor=tol["gap_floor"])
    n = int(round((cfg["oracle"]["samples"] - 1) * refine)) + 1
    rows = ["t,sup_err,energy_ode,energy_exact"]
    worst = 0.0
    for t in np.linspace(0.0, cfg["time"]["t_end"], n):
        f, g = ode.view(t), peakon_antipeakon_field(pr, t)
        xs = np.concatenate([np.linspace(-10, 10, 4001), f.x, g.x])
        err = float(np.max(np.abs(f.u(xs) - g.u(xs))))
        if t <= 0.9 * T:
            worst = max(worst, err)
        rows.append(f"{float(t)!r},{err!r},{f.h1_energy()!r},{g.h1_energy()!r}")
    p = Path(out) / "oracle_compare.csv"
    write_atomic(p, "\n".join(rows) + "\n")
    if worst > tol["oracle_tol"]:
        raise NumericalFailure(f"multipeakon_step vs exact profile: sup error {worst:.3e} > {tol['oracle_tol']}")
    return [p]


COMMANDS = {
    "simulate": cmd_simulate,
    "energy-report": cmd_energy_report,
    "characteristics": cmd_characteristics,
    "kernel-check": cmd_kernel_check,
    "oracle-compare": cmd_oracle_compare,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="peakonlab", description="Characteristics and slope energies of peakon solutions.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML or JSON scenario file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--refine", type=float, default=1.0, help="resolution factor for meshes and time grids")
        if name in ("energy-report", "characteristics"):
            sp.add_argument("--trajectory", help="trajectory file (default: <out>/trajectory.txt)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if not args.refine > 0:
            raise ConfigError("--refine must be > 0")
        cfg = load_config(args.config)
        fn = COMMANDS[args.command]
        kw = {"refine": args.refine, "seed": args.seed}
        if args.command in ("energy-report", "characteristics"):
            kw["trajectory"] = _trajectory_path(args, args.out)
        written = fn(cfg, args.out, **kw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrajectoryError as exc:
        print(f"trajectory error: {exc}", file=sys.stderr)
        return EXIT_TRAJECTORY
    except NumericalFailure as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PeakonlabError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure in {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: solve, oracle, limits and verify commands.

Configuration is one JSON file; outputs are CSV/JSON plus report figures in
the output directory.  Floats are serialized with 17 significant digits and
runs with the same config and seed are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import figures
from .limits import (
    vanishing_damping_study,
    w1_distance,
    zero_relaxation_study,
)
from .measure import Atom, InitialData, initial_from_json
from .potential import SpreadMode, build_profile, undamped
from .solution import extract_measure, mass_at, sample_grid
from .sticky import discretize, evolve, oracle_cdf, velocity
from .verify import run_battery

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _tag(t: float) -> str:
    return f"{t:g}"


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


class RunConfig:
    """Validated run configuration."""

    def __init__(self, raw: dict, out_override: str | None,
                 seed_override: int | None, threads: int):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        if "initial" not in raw:
            raise ConfigError("config needs an 'initial' block")
        try:
            self.data: InitialData = initial_from_json(raw["initial"])
        except ValueError as e:
            raise ConfigError(f"initial: {e}") from None
        mode = raw.get("mode", "undamped")
        tau = raw.get("tau")
        if mode == "undamped":
            if tau is not None:
                raise ConfigError("mode 'undamped' takes no tau")
            self.mode = undamped()
        elif mode in ("damped", "scaled"):
            if tau is None:
                raise ConfigError(f"mode {mode!r} requires tau")
            try:
                self.mode = SpreadMode(mode, float(tau))
            except ValueError as e:
                raise ConfigError(f"tau: {e}") from None
        else:
            raise ConfigError(f"mode must be undamped|damped|scaled, "
                              f"got {mode!r}")
        self.raw = raw
        self.seed = int(seed_override if seed_override is not None
                        else raw.get("seed", 0))
        out = out_override or os.environ.get("PRESSURELESS_OUT") \
            or raw.get("out") or "out"
        self.out = str(out)
        self.threads = max(1, threads)

    def block(self, name: str) -> dict:
        blk = self.raw.get(name, {})
        if not isinstance(blk, dict):
            raise ConfigError(f"{name!r} block must be a JSON object")
        return blk

    def grid(self, spec, default_n: int = 512) -> np.ndarray:
        if spec is None:
            lo, hi = self.data.support_bounds()
            pad = self.data.U * 2.0 + 1.0
            return np.linspace(lo - pad, hi + pad, default_n)
        try:
            lo, hi, n = float(spec["lo"]), float(spec["hi"]), int(spec["n"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"grid spec needs lo/hi/n: {e}") from None
        if not (hi > lo and n >= 2):
            raise ConfigError("grid spec needs hi > lo and n >= 2")
        return np.linspace(lo, hi, n)


def _positive_times(blk: dict, key: str, default) -> list[float]:
    times = [float(t) for t in blk.get(key, default)]
    if not times:
        raise ConfigError(f"{key} must be nonempty")
    if any(t <= 0 for t in times):
        raise ConfigError(f"{key} must be positive")
    return times


def cmd_solve(cfg: RunConfig) -> int:
    blk = cfg.block("solve")
    times = _positive_times(blk, "times", [1.0])
    xs = cfg.grid(blk.get("x_grid"))
    rows = sample_grid(cfg.data, xs, times, cfg.mode,
                       max_workers=cfg.threads)
    write_csv(os.path.join(cfg.out, "solution.csv"),
              ["x", "t", "m", "q", "u", "u_left", "u_right", "regime"],
              [(r.x, r.t, r.m, r.q, r.u, r.u_left, r.u_right, r.regime)
               for r in rows])

    for t in [float(v) for v in blk.get("measure_times", [])]:
        n = int(blk.get("measure_grid_n", 1024))
        lo, hi = cfg.data.support_bounds()
        pad = cfg.data.U * cfg.mode.spread(t) + 0.5
        pieces = extract_measure(cfg.data, t, cfg.mode,
                                 np.linspace(lo - pad, hi + pad, n))
        out_rows = []
        for p in pieces:
            if isinstance(p, Atom):
                out_rows.append(("atom", p.x, "", "", p.mass, "", p.v))
            else:
                out_rows.append(("block", "", p.a, p.b, "", p.density, p.v))
        write_csv(os.path.join(cfg.out, f"measure_t{_tag(t)}.csv"),
                  ["kind", "x", "a", "b", "mass", "density", "v"], out_rows)

    prof_spec = blk.get("dump_profile")
    if prof_spec:
        x0, t0 = float(prof_spec["x"]), float(prof_spec["t"])
        n = int(prof_spec.get("n", 400))
        prof = build_profile(cfg.data, x0, t0, cfg.mode)
        ys = np.linspace(prof.domain[0], prof.domain[1], n)
        write_csv(os.path.join(cfg.out, "profile.csv"), ["y", "F"],
                  [(float(y), prof.value(float(y))) for y in ys])

    figures.solution_figure(rows, os.path.join(cfg.out, "solution.png"))
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    blk = cfg.block("oracle")
    times = _positive_times(blk, "times", [1.0])
    n_per_block = int(blk.get("n_per_block", 1000))
    probe_n = int(blk.get("probe_n", 512))
    state0 = discretize(cfg.data, n_per_block, cfg.mode)

    compare_rows = []
    plots = []
    for t in times:
        state = evolve(state0, t)
        write_csv(os.path.join(cfg.out, f"particles_t{_tag(t)}.csv"),
                  ["t", "x", "mass", "velocity"],
                  [(t, x, m, v) for x, m, v in
                   zip(state.pos, state.mass, velocity(state))])

        lo = float(state.pos[0]) - 0.5
        hi = float(state.pos[-1]) + 0.5
        rng = np.random.default_rng(cfg.seed)
        probes = np.sort(rng.uniform(lo, hi, probe_n))
        keep = [x for x in probes
                if np.min(np.abs(state.pos - x)) > 1e-6]
        solver_m = [mass_at(cfg.data, float(x), t, cfg.mode) for x in keep]
        oracle_m = [oracle_cdf(state, float(x)) for x in keep]
        sup_gap = max((abs(a - b) for a, b in zip(solver_m, oracle_m)),
                      default=0.0)

        pad = cfg.data.U * cfg.mode.spread(t) + 0.5
        s_lo, s_hi = cfg.data.support_bounds()
        grid = np.linspace(min(s_lo - pad, lo), max(s_hi + pad, hi), 2048)
        pieces = extract_measure(cfg.data, t, cfg.mode, grid)
        oracle_pieces = [Atom(float(x), float(m), float(v)) for x, m, v in
                         zip(state.pos, state.mass, velocity(state))]
        w1_gap = w1_distance(pieces, oracle_pieces)
        compare_rows.append((t, n_per_block, sup_gap, w1_gap))
        plots.append((t, keep, solver_m, oracle_m))

    write_csv(os.path.join(cfg.out, "oracle_compare.csv"),
              ["t", "n_per_block", "sup_gap", "w1_gap"], compare_rows)
    figures.oracle_figure(plots, os.path.join(cfg.out, "oracle.png"))
    return EXIT_OK


def _write_limits_report(report, out_dir: str) -> None:
    path = os.path.join(out_dir, f"limits_{report.study}.csv")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["tau", "w1", "sup_cdf", "sup_velocity_metric",
                         "analytic_envelope"])
        for row in zip(report.tau_values, report.w1, report.sup_cdf,
                       report.sup_velocity, report.envelope):
            writer.writerow([fmt(v) for v in row])
        f.write(f"# fitted_rate,{fmt(report.rate)}\n")
    figures.limits_figure(report, os.path.join(out_dir,
                                               f"limits_{report.study}.png"))


def cmd_limits(cfg: RunConfig) -> int:
    blk = cfg.block("limits")
    taus = [float(v) for v in blk.get("taus", [])]
    if not taus:
        raise ConfigError("limits.taus must be nonempty")
    if any(v <= 0 for v in taus):
        raise ConfigError("limits.taus must be positive")
    t = float(blk.get("t", 1.0))
    if t <= 0:
        raise ConfigError("limits.t must be positive")
    grid_n = int(blk.get("grid_n", 4096))
    studies = blk.get("studies", ["zero_relaxation", "vanishing_damping"])
    for study in studies:
        if study == "zero_relaxation":
            report = zero_relaxation_study(cfg.data, taus, t, grid_n=grid_n)
        elif study == "vanishing_damping":
            report = vanishing_damping_study(cfg.data, taus, t, grid_n=grid_n)
        else:
            raise ConfigError(f"unknown limits study {study!r}")
        _write_limits_report(report, cfg.out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    blk = cfg.block("verify")
    report = run_battery(cfg.data, cfg.mode, blk, seed=cfg.seed)
    payload = {
        "mode": cfg.mode.mode,
        "tau": cfg.mode.tau,
        "seed": cfg.seed,
        "checks": report,
        "all_pass": all(entry["pass"] for entry in report),
    }
    with open(os.path.join(cfg.out, "verification.json"), "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return EXIT_OK if payload["all_pass"] else EXIT_CHECK_FAILED


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "limits": cmd_limits,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pressureless",
        description="Variational solver for the 1-D pressureless Euler "
                    "system with relaxation/damping",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "sample solution fields and extract snapshot measures"),
        ("oracle", "compare against the sticky-particle oracle"),
        ("limits", "run zero-relaxation / vanishing-damping studies"),
        ("verify", "run the entropy/weak-form verification battery"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default=None,
                       help="output directory (overrides config and "
                            "PRESSURELESS_OUT)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as f:
            raw = json.load(f)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        print(f"error: malformed JSON in {args.config}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = RunConfig(raw, args.out, args.seed, args.threads)
        os.makedirs(cfg.out, exist_ok=True)
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

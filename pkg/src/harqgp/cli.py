"""Command-line harness: ``harqgp {bounds,optimize,simulate,sweep}``.

Every subcommand reads a JSON scenario (``--config``) and writes UTF-8 CSV or
JSON. CSV outputs start with ``#``-prefixed metadata lines carrying the tool
version, the command line, and the sha256 of the canonical config.

Exit codes: 0 success, 2 infeasible, 3 invalid input, 4 solver did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .gpsolve import InfeasibleLatency, Method, SolveReport, Status, optimize, predicted_metrics
from .outage import Flavor, bound_outages, bounds_for, exact_outages
from .scenario import ParseError, PowerSchedule, ScenarioConfig, ValidationError, load_scenario
from .sim import run_trials

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_NOCONVERGE = 0, 2, 3, 4

SWEEP_PARAMS = ("snr", "latency_target", "message_bits", "max_power")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    methods: tuple

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMS:
            raise ValidationError("parameter", f"must be one of {SWEEP_PARAMS}")
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValidationError("values", "sweep needs at least one value")
        d = np.diff(vals)
        if d.size and not (np.all(d > 0) or np.all(d < 0)):
            raise ValidationError("values", "sweep values must be strictly monotone")
        methods = tuple(Method(m) for m in self.methods)
        if not methods:
            raise ValidationError("methods", "sweep needs at least one method")
        object.__setattr__(self, "methods", methods)


def metadata_lines(cfg: ScenarioConfig, command: str) -> list[str]:
    return [
        f"# harqgp {__version__}",
        f"# command: {command}",
        f"# config_sha256: {cfg.digest()}",
        "# config: " + json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":")),
    ]


def write_csv(fh, meta: Sequence[str], header: Sequence[str], rows: Sequence[Sequence]):
    for line in meta:
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


# ---------------------------------------------------------------- commands


def cmd_bounds(cfg: ScenarioConfig, schedule: Sequence[float], t_values: Sequence[float]):
    """Rows of (t, exact_1..N, new_1..N, classic_1..N) over message sizes."""
    N = cfg.n_blocks
    header = ["t"] + [f"exact_{n}" for n in range(1, N + 1)] + [f"new_{n}" for n in range(1, N + 1)] \
        + [f"classic_{n}" for n in range(1, N + 1)]
    rows = []
    for t in t_values:
        c = cfg.with_(message_bits=float(t))
        ex = exact_outages(c, schedule)
        nb = bound_outages(bounds_for(c, Flavor.NEW), schedule)
        try:
            cl = list(bound_outages(bounds_for(c, Flavor.CLASSIC), schedule))
        except ValueError:
            cl = [None] * N
        rows.append([float(t)] + [float(v) for v in ex] + [float(v) for v in nb]
                    + [None if v is None else float(v) for v in cl])
    return header, rows


def cmd_optimize(cfg: ScenarioConfig, method: str, tol: float = 1e-9, unconstrained: bool = False) -> SolveReport:
    return optimize(cfg, method, tol=tol, unconstrained=unconstrained)


def cmd_simulate(cfg: ScenarioConfig, schedule: Sequence[float], trials: int, seed: int, **kw):
    return run_trials(cfg, schedule, trials, seed, **kw)


SWEEP_HEADER_BASE = ["x", "method", "status", "feasible", "energy", "latency", "outage_exact",
                     "energy_mc", "energy_mc_ci", "latency_mc", "latency_mc_ci", "outage_mc", "outage_mc_ci"]


def _sweep_point(cfg: ScenarioConfig, spec: SweepSpec, x: float, trials: int, seed: int, tol: float):
    c = cfg.with_(**{spec.parameter: x})
    e0 = c.max_power * c.block_lengths[0]
    l0 = c.block_lengths[0]
    rows = []
    for m in spec.methods:
        try:
            rep = optimize(c, m, tol=tol)
        except InfeasibleLatency:
            rep = SolveReport(None, math.inf, Status.INFEASIBLE)
        feasible = rep.status is Status.OPTIMAL
        row = [x, m.value, rep.status.value, int(feasible)]
        if rep.schedule is None:
            row += [None] * (len(SWEEP_HEADER_BASE) - 4) + [None] * c.n_blocks
        else:
            met = predicted_metrics(c, rep.schedule, "exact")
            row += [met.energy / e0, met.latency / l0, met.outage]
            if trials > 0:
                sim = run_trials(c, rep.schedule, trials, seed)
                row += [sim.energy, sim.energy_ci, sim.latency, sim.latency_ci, sim.outage, sim.outage_ci]
            else:
                row += [None] * 6
            row += list(rep.schedule.powers)
        rows.append(row)
    return rows


def cmd_sweep(cfg: ScenarioConfig, spec: SweepSpec, trials: int = 0, seed: int = 0,
              tol: float = 1e-9, workers: int = 1):
    """One row per (sweep value, method): energy in E0, latency in L_1, exact Q_N,
    optional Monte Carlo columns, and the per-block powers."""
    header = [spec.parameter if h == "x" else h for h in SWEEP_HEADER_BASE] \
        + [f"p_{n}" for n in range(1, cfg.n_blocks + 1)]

    def job(x):
        return _sweep_point(cfg, spec, x, trials, seed, tol)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, spec.values))
    else:
        parts = [job(x) for x in spec.values]
    return header, [r for part in parts for r in part]


# ---------------------------------------------------------------- arg parsing


def _floats(text: str) -> list[float]:
    """'1,2,3' or 'start:stop:step' (inclusive stop)."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        k = int(math.floor((b - a) / s + 1e-9))
        return [a + i * s for i in range(k + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def read_schedule(path: str) -> list[float]:
    """Powers from JSON (list, or object with "powers") or from an optimize CSV."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("[") or stripped.startswith("{"):
        d = json.loads(text)
        return [float(v) for v in (d["powers"] if isinstance(d, dict) else d)]
    rows = [r for r in csv.reader(line for line in text.splitlines() if line and not line.startswith("#"))]
    return [float(r[1]) for r in rows[1:]]


def _load(args) -> ScenarioConfig:
    with open(args.config, "rb") as fh:
        cfg = load_scenario(fh)
    if args.grid_points is not None:
        cfg = cfg.with_(grid_points=args.grid_points)
    if args.snr_db is not None:
        cfg = cfg.with_(snr=10.0 ** (args.snr_db / 10.0))
    elif args.snr is not None:
        cfg = cfg.with_(snr=args.snr)
    return cfg


def _open_out(args):
    if args.out in (None, "-"):
        return sys.stdout, False
    return open(args.out, "w", encoding="utf-8", newline=""), True


def _schedule_arg(args, cfg: ScenarioConfig) -> list[float]:
    if getattr(args, "powers", None):
        p = _floats(args.powers)
    elif getattr(args, "schedule", None):
        p = read_schedule(args.schedule)
    elif getattr(args, "method", None):
        rep = optimize(cfg, args.method, tol=args.tol)
        if rep.schedule is None:
            raise _Infeasible(rep)
        p = list(rep.schedule.powers)
    else:
        p = [getattr(args, "power_ratio", 1.0) * cfg.max_power] * cfg.n_blocks
    PowerSchedule(p).check(cfg)
    return p


class _Infeasible(Exception):
    def __init__(self, report):
        self.report = report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harqgp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"harqgp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scenario JSON")
        p.add_argument("--grid-points", type=int, default=None, help="override convolution grid size")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--snr", type=float, default=None, help="override S (linear)")
        g.add_argument("--snr-db", type=float, default=None, help="override S in dB")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--tol", type=float, default=1e-9, help="barrier duality-gap tolerance")

    p = sub.add_parser("bounds", help="exact outage vs. new and classic bounds over message sizes")
    common(p)
    p.add_argument("--t-values", default=None, help="message sizes: 'a,b,c' or 'start:stop:step'")
    p.add_argument("--powers", default=None, help="per-block powers 'p1,p2,...'")
    p.add_argument("--power-ratio", type=float, default=0.8, help="uniform p_n / P when --powers is absent")

    p = sub.add_parser("optimize", help="solve for a power schedule")
    common(p)
    p.add_argument("--method", default="gp_new", choices=[m.value for m in Method])
    p.add_argument("--unconstrained", action="store_true",
                   help="drop the box and latency constraints (tight outage substituted)")

    p = sub.add_parser("simulate", help="Monte Carlo HARQ run of a schedule")
    common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--schedule", default=None, help="JSON or optimize-CSV file with powers")
    src.add_argument("--powers", default=None, help="per-block powers 'p1,p2,...'")
    src.add_argument("--method", default=None, choices=[m.value for m in Method], help="optimize first")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=1 << 16)
    p.add_argument("--feedback", choices=["deterministic", "exponential"], default="deterministic")
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("sweep", help="sweep one parameter across methods")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="'a,b,c' or 'start:stop:step'")
    p.add_argument("--db", action="store_true", help="snr sweep values are in dB")
    p.add_argument("--methods", default="max_power,gp_classic,gp_new")
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per point (0: exact only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = "harqgp " + " ".join(sys.argv[1:] if argv is None else argv)
    try:
        cfg = _load(args)
        return _dispatch(args, cfg, command)
    except (ParseError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _Infeasible as exc:
        print(json.dumps(exc.report.to_dict(), indent=2), file=sys.stderr)
        return EXIT_INFEASIBLE


def _dispatch(args, cfg: ScenarioConfig, command: str) -> int:
    meta = metadata_lines(cfg, command)
    if args.command == "bounds":
        ts = _floats(args.t_values) if args.t_values else [cfg.message_bits]
        header, rows = cmd_bounds(cfg, _schedule_arg(args, cfg), ts)
        fh, close = _open_out(args)
        write_csv(fh, meta, header, rows)
        if close:
            fh.close()
        return EXIT_OK

    if args.command == "optimize":
        try:
            rep = cmd_optimize(cfg, args.method, args.tol, args.unconstrained)
        except InfeasibleLatency as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        d = rep.to_dict()
        d["method"] = args.method
        d["config_sha256"] = cfg.digest()
        print(json.dumps(d, indent=2))
        if args.out and rep.schedule is not None:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                write_csv(fh, meta, ["block", "power"],
                          [[n, p] for n, p in enumerate(rep.schedule.powers, start=1)])
        if rep.status is Status.INFEASIBLE:
            return EXIT_INFEASIBLE
        if rep.status is Status.MAX_ITERATIONS:
            return EXIT_NOCONVERGE
        return EXIT_OK

    if args.command == "simulate":
        sched = _schedule_arg(args, cfg)
        rep = cmd_simulate(cfg, sched, args.trials, args.seed, workers=args.workers,
                           batch_size=args.batch_size, feedback=args.feedback)
        fh, close = _open_out(args)
        if args.format == "json":
            d = rep.to_dict()
            d["powers"] = sched
            d["config_sha256"] = cfg.digest()
            fh.write(json.dumps(d, indent=2) + "\n")
        else:
            d = rep.to_dict()
            usage = d.pop("block_usage")
            header = list(d) + [f"usage_{n}" for n in range(1, len(usage) + 1)]
            write_csv(fh, meta + ["# powers: " + ",".join(repr(p) for p in sched)], header,
                      [list(d.values()) + usage])
        if close:
            fh.close()
        return EXIT_OK

    # sweep
    values = _floats(args.values)
    if args.param == "snr" and args.db:
        values = [10.0 ** (v / 10.0) for v in values]
    spec = SweepSpec(args.param, tuple(values), tuple(m.strip() for m in args.methods.split(",") if m.strip()))
    header, rows = cmd_sweep(cfg, spec, args.trials, args.seed, args.tol, args.workers)
    fh, close = _open_out(args)
    write_csv(fh, meta, header, rows)
    if close:
        fh.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

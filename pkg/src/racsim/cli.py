"""Command-line front end.

Subcommands:
  run     one trial, per-step trace CSV
  sweep   Monte Carlo sweep over one variable, metrics CSV
  theory  closed-form quantity grids, CSV
  trace   one trial, per-step per-sensor reputation snapshot CSV

Configuration precedence: built-in defaults < config file (--config) <
environment variables (RACSIM_<KEY>, e.g. RACSIM_N_SENSORS) < command-line
flags. Flags mirror the flat config keys with dashes.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__, analysis, experiments, model
from .experiments import Algorithm, SweepSpec
from .model import ConfigError, ScenarioConfig

ENV_PREFIX = "RACSIM_"


def parse_values(text: str) -> tuple[float, ...]:
    """Sweep value list: either comma-separated or an a:b:step range with
    inclusive endpoints (within 1e-9)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is a:b:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        values = []
        x = a
        while x <= b + 1e-9:
            values.append(round(x, 12))
            x = a + (len(values)) * step
        return tuple(values)
    return tuple(float(p) for p in text.split(","))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="flat key=value config file")
    for key, caster in model.CONFIG_FIELDS.items():
        flag = "--" + key.replace("_", "-")
        if caster is model._parse_bool:
            parser.add_argument(flag, dest=f"cfg_{key}", metavar="BOOL")
        else:
            parser.add_argument(flag, dest=f"cfg_{key}", metavar=key.upper(),
                                type=str)


def _gather_config(args: argparse.Namespace) -> ScenarioConfig:
    values: dict[str, object] = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        values.update(model.load_config_file(args.config))
    for key in model.CONFIG_FIELDS:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = env
        flag = getattr(args, f"cfg_{key}", None)
        if flag is not None:
            values[key] = flag
    return model.config_from_mapping(values)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _gather_config(args)
    algorithm = Algorithm(args.algorithm)
    rows: list[tuple] = []

    def on_step(t, report, assignment, outcome, ledger):
        score = outcome.fused_score if outcome is not None else float("nan")
        decision = outcome.fc_decision if outcome is not None else -1
        rows.append((t, int(report.truth), int(report.u.sum()), int(report.mms.sum()),
                     int(report.anchor_decisions.sum()), decision, f"{score:.6g}"))

    result = experiments.run_trial(cfg, algorithm, on_step=on_step)
    out, close = _open_out(args.output)
    try:
        out.write("step,truth,u_popcount,mms_popcount,anchor_ones,decision,score\n")
        for t, truth, upc, mpc, anc, dec, score in rows:
            err = int(dec != truth)
            out.write(f"{t},{truth},{upc},{mpc},{anc},{dec},{score}\n")
        out.flush()
    finally:
        if close:
            out.close()
    print(f"error_prob={result.error_prob!r} "
          f"identified_fraction={result.identified_fraction!r}", file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _gather_config(args)
    spec = SweepSpec(base=cfg, sweep_variable=args.sweep_variable,
                     values=parse_values(args.values), trials=args.trials,
                     algorithm=Algorithm(args.algorithm))
    rows = experiments.run_sweep(spec, workers=args.parallel)
    out, close = _open_out(args.output)
    try:
        out.write(experiments.metrics_csv_text(rows))
        out.flush()
    finally:
        if close:
            out.close()
    if args.provenance:
        import json
        with open(args.provenance, "w") as fh:
            json.dump({"version": __version__, "config": asdict(cfg),
                       "sweep_variable": spec.sweep_variable,
                       "values": list(spec.values), "trials": spec.trials,
                       "algorithm": spec.algorithm.value}, fh, indent=2)
    return 0


def cmd_theory(args: argparse.Namespace) -> int:
    alpha0s = parse_values(args.alpha0) if args.alpha0 else (0.5,)
    grid = args.grid
    p1s = parse_values(args.p1_values) if args.p1_values else tuple(np.linspace(0, 1, grid))
    p2s = parse_values(args.p2_values) if args.p2_values else tuple(np.linspace(0, 1, grid))
    fields = (tuple(f.strip() for f in args.fields.split(","))
              if args.fields else analysis.TheoryPoint.SCALAR_FIELDS)
    for f in fields:
        if f not in analysis.TheoryPoint.SCALAR_FIELDS:
            raise ConfigError(f"unknown theory field {f!r}; choose from "
                              f"{analysis.TheoryPoint.SCALAR_FIELDS}")
    out, close = _open_out(args.output)
    try:
        out.write(",".join(("alpha0", "p1", "p2") + fields) + "\n")
        for a0 in alpha0s:
            for p1 in p1s:
                for p2 in p2s:
                    tp = analysis.theory_point(a0, p1, p2, args.p_d, args.p_f,
                                               args.prior_h1)
                    cells = [repr(float(a0)), repr(float(p1)), repr(float(p2))]
                    cells += [repr(float(tp.scalar(f))) for f in fields]
                    out.write(",".join(cells) + "\n")
        out.flush()
    finally:
        if close:
            out.close()
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    cfg = _gather_config(args)
    algorithm = Algorithm(args.algorithm)
    every = args.every
    out, close = _open_out(args.output)
    roles_of = {}

    def on_step(t, report, assignment, outcome, ledger):
        if t % every != 0 or assignment is None:
            return
        pop = roles_of["pop"]
        for i in range(pop.n):
            out.write(f"{t},{i},{int(pop.roles[i])},{pop.reputation[i]!r},"
                      f"{int(assignment.cluster_of[i])},{int(ledger.removed[i])}\n")

    # run_trial builds its own population; capture it via a small shim
    orig_build = experiments.build_population

    def capture(cfg_, rng_):
        pop = orig_build(cfg_, rng_)
        roles_of["pop"] = pop
        return pop

    experiments.build_population = capture
    try:
        out.write("step,sensor,byzantine,reputation,cluster,removed\n")
        result = experiments.run_trial(cfg, algorithm, on_step=on_step)
    finally:
        experiments.build_population = orig_build
        out.flush()
        if close:
            out.close()
    print(f"error_prob={result.error_prob!r} "
          f"identified_fraction={result.identified_fraction!r}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="racsim",
        description="Simulate and analyze reputation/audit-bit defenses for "
                    "distributed detection under Byzantine attack.")
    parser.add_argument("--version", action="version", version=f"racsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trial and emit a per-step trace")
    _add_config_flags(p_run)
    p_run.add_argument("--algorithm", default="RAC",
                       choices=[a.value for a in Algorithm])
    p_run.add_argument("--output", "-o", help="trace CSV path (default stdout)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo sweep over one variable")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--sweep-variable", required=True,
                         choices=experiments.SWEEP_VARIABLES)
    p_sweep.add_argument("--values", required=True,
                         help="comma list or a:b:step range (inclusive)")
    p_sweep.add_argument("--trials", type=int, default=20)
    p_sweep.add_argument("--algorithm", default="RAC",
                         choices=[a.value for a in Algorithm])
    p_sweep.add_argument("--parallel", type=int, default=None,
                         help="max worker processes (default: machine capacity)")
    p_sweep.add_argument("--output", "-o", help="metrics CSV path (default stdout)")
    p_sweep.add_argument("--provenance", help="also write a JSON config echo")
    p_sweep.set_defaults(func=cmd_sweep)

    p_theory = sub.add_parser("theory", help="closed-form quantity grids")
    p_theory.add_argument("--alpha0", help="comma list or range (default 0.5)")
    p_theory.add_argument("--p1-values", help="comma list or range (default grid)")
    p_theory.add_argument("--p2-values", help="comma list or range (default grid)")
    p_theory.add_argument("--grid", type=int, default=101,
                          help="points per default p1/p2 axis (default 101)")
    p_theory.add_argument("--p-d", type=float, default=0.9)
    p_theory.add_argument("--p-f", type=float, default=0.1)
    p_theory.add_argument("--prior-h1", type=float, default=0.5)
    p_theory.add_argument("--fields", help="comma list of output fields (default all)")
    p_theory.add_argument("--output", "-o", help="CSV path (default stdout)")
    p_theory.set_defaults(func=cmd_theory)

    p_trace = sub.add_parser("trace", help="per-step per-sensor reputation snapshots")
    _add_config_flags(p_trace)
    p_trace.add_argument("--algorithm", default="RACA",
                         choices=[a.value for a in Algorithm])
    p_trace.add_argument("--every", type=int, default=1,
                         help="snapshot every k-th step (default 1)")
    p_trace.add_argument("--output", "-o", help="CSV path (default stdout)")
    p_trace.set_defaults(func=cmd_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Every output embeds the resolved configuration, including the argument
vector that reproduces it (``--out`` and ``--jobs`` excluded, since neither
changes any number).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .bounds import BoundParams, partial_sum_bound, region_scan, theorem1_bound
from .disorder import QuenchedEstimate, SeedSpec, draw_sample, map_samples, quenched_estimates
from .mc import START_MODES, metropolis_run
from .model import Distribution, HierarchyParams, HypothesisError, ThermoParams
from .verification import (
    gibbs_bogoliubov_check,
    lemma3_check,
    lemma5_check,
    lipschitz_check,
    lipschitz_constant,
    tail_check,
)

EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3
VERIFY_TARGETS = ("lemma3", "lemma5", "lipschitz", "tail", "gb")


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    """Round-trip-exact text for floats (17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--alpha", type=float)
    g.add_argument("--N", type=int, dest="N")
    g.add_argument("--beta", type=float)
    g.add_argument("--h", type=float)
    g.add_argument("--dist", choices=[d.value for d in Distribution], default="gaussian")
    g.add_argument("--zero-temperature", action="store_true",
                   help="evaluate bounds at beta -> infinity (bound and region only)")
    b = common.add_argument_group("bound")
    b.add_argument("--c", type=float, default=10.0)
    b.add_argument("--d", type=float, default=0.0)
    s = common.add_argument_group("sampling")
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    o.add_argument("--out", default="-")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="dysonrfim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("exact", parents=[common], help="exact quenched f_N and pressure")
    mc = sub.add_parser("mc", parents=[common], help="Metropolis estimate of <S^2>")
    mc.add_argument("--sweeps", type=int, default=20000)
    mc.add_argument("--burn-in", type=int, default=2000)
    mc.add_argument("--start", choices=START_MODES, default="random", help="initial spin configuration")
    sub.add_parser("bound", parents=[common], help="closed-form and partial-sum bounds")
    region = sub.add_parser("region", parents=[common], help="positivity region of the bound")
    region.add_argument("--h-min", type=float, default=0.0)
    region.add_argument("--h-max", type=float)
    region.add_argument("--invbeta-min", type=float, default=0.0)
    region.add_argument("--invbeta-max", type=float)
    region.add_argument("--grid", type=int, default=64)
    verify = sub.add_parser("verify", parents=[common], help="empirical inequality checks (JSON)")
    verify.add_argument("--target", choices=VERIFY_TARGETS, required=True)
    verify.add_argument("--t-values", default="0.5,1,2", help="tail thresholds as multiples of L")
    verify.add_argument("--trials", type=int, default=1000, help="Lipschitz probes")
    verify.add_argument("--step", type=float, default=1e-4, help="finite-difference step")
    verify.add_argument("--strict", action="store_true", help="fail on empty restricted sectors")
    return parser


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required parameter(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _model(args) -> tuple[HierarchyParams, ThermoParams]:
    _require(args, "alpha", "N", "beta", "h")
    return HierarchyParams(args.alpha, args.N), ThermoParams(args.beta, args.h, Distribution(args.dist))


def _strip_argv(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in ("--out", "--jobs"):
            skip = True
            continue
        if a.startswith("--out=") or a.startswith("--jobs="):
            continue
        out.append(a)
    return out


def _config(args, argv) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "jobs")}
    cfg["argv"] = _strip_argv(argv)
    return cfg


def _csv_text(config: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) if not isinstance(x, str) else x for x in r])
    return buf.getvalue()


def _json_text(config: dict, payload: dict) -> str:
    return json.dumps({"config": config, **payload}, indent=2, sort_keys=True) + "\n"


def _estimate_rows(estimates: list[QuenchedEstimate]) -> list[list]:
    return [[e.tag, e.mean, e.stderr, e.n_samples] for e in estimates]


def _emit_estimates(args, config, estimates):
    if args.format == "json":
        return _json_text(config, {"results": [e.to_dict() for e in estimates]})
    return _csv_text(config, ["quantity", "mean", "stderr", "n_samples"], _estimate_rows(estimates))


def _no_zero_temperature(args):
    if args.zero_temperature:
        raise UsageError("--zero-temperature applies only to bound and region")


def cmd_exact(args, config):
    _no_zero_temperature(args)
    p, t = _model(args)
    samples = 100 if args.samples is None else args.samples
    f, pressure = quenched_estimates(p, t, samples, SeedSpec(args.seed, args.stream), args.jobs)
    return _emit_estimates(args, config, [f, pressure])


def cmd_mc(args, config):
    _no_zero_temperature(args)
    p, t = _model(args)
    samples = 1 if args.samples is None else args.samples
    if samples < 1:
        raise UsageError("--samples must be >= 1")
    seed = SeedSpec(args.seed, args.stream)

    def one(j):
        d = draw_sample(t, p, seed, j)
        return metropolis_run(p, t, d, args.sweeps, args.burn_in, seed, index=j, start=args.start)

    results = map_samples(one, samples, args.jobs)
    estimates = [QuenchedEstimate(r.mean_S2, r.stderr, r.n_measurements, f"mean_S2[{j}]") for j, r in enumerate(results)]
    if samples >= 2:
        estimates.append(QuenchedEstimate.from_values((r.mean_S2 / 4.0 ** p.depth for r in results), "f_N"))
    return _emit_estimates(args, config, estimates)


def _bound_beta(args) -> float:
    if args.zero_temperature:
        return math.inf
    _require(args, "beta")
    return args.beta


def cmd_bound(args, config):
    _require(args, "alpha", "h")
    if args.d != 0:
        raise HypothesisError("d = 0", f"the closed-form bound needs d = 0, got d={args.d}")
    beta = _bound_beta(args)
    rows = [["theorem1_bound", theorem1_bound(args.alpha, args.c, beta, args.h)]]
    if args.N is not None:
        rows.append(["partial_sum_bound", partial_sum_bound(args.alpha, args.c, beta, args.h, args.N)])
    if args.format == "json":
        return _json_text(config, {"results": {name: value for name, value in rows}})
    return _csv_text(config, ["quantity", "value"], rows)


def cmd_region(args, config):
    _require(args, "alpha", "h_max", "invbeta_max")
    if args.grid < 1:
        raise UsageError("--grid must be >= 1")
    h_grid = np.linspace(args.h_min, args.h_max, args.grid)
    ib_grid = np.linspace(args.invbeta_min, args.invbeta_max, args.grid)
    values, positive = region_scan(args.alpha, args.c, h_grid, ib_grid)
    rows = [[h, ib, values[i, j], bool(positive[i, j])]
            for i, h in enumerate(h_grid) for j, ib in enumerate(ib_grid)]
    if args.format == "json":
        points = [{"h": h, "inv_beta": ib, "bound": v, "positive": pos} for h, ib, v, pos in rows]
        return _json_text(config, {"results": points, "n_positive": int(positive.sum())})
    return _csv_text(config, ["h", "inv_beta", "bound", "positive"], rows)


def cmd_verify(args, config):
    _no_zero_temperature(args)
    p, t = _model(args)
    bp = BoundParams(args.c, args.d)
    seed = SeedSpec(args.seed, args.stream)
    N = p.depth
    samples = 2000 if args.samples is None else args.samples
    if args.target == "lemma3":
        reports = [lemma3_check(p, t, bp, N, samples, seed, args.jobs, args.strict)]
    elif args.target == "lemma5":
        reports = [lemma5_check(p, t, bp, N, samples, seed, args.jobs, args.strict)]
    elif args.target == "lipschitz":
        reports = [lipschitz_check(p, t, bp, N, args.trials, seed, args.step, args.jobs)]
    elif args.target == "tail":
        L = lipschitz_constant(p, t)
        multiples = [float(x) for x in args.t_values.split(",") if x.strip()]
        reports = tail_check(p, t, bp, N, samples, [m * L for m in multiples], seed, args.jobs)
    else:
        reports = [gibbs_bogoliubov_check(p, t, N, samples, seed, args.jobs)]
    return _json_text(config, {"reports": [r.to_dict() for r in reports]})


COMMANDS = {"exact": cmd_exact, "mc": cmd_mc, "bound": cmd_bound, "region": cmd_region, "verify": cmd_verify}


def execute(args: argparse.Namespace, argv: list[str]) -> tuple[int, str]:
    """Dispatch parsed arguments; returns ``(exit status, emitted text or error message)``."""
    if args.command == "verify":
        args.format = "json"
    config = _config(args, argv)
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return 0, COMMANDS[args.command](args, config)
    except HypothesisError as exc:
        return EXIT_HYPOTHESIS, f"error: {exc}"
    except (UsageError, ValueError) as exc:
        return EXIT_USAGE, f"error: {exc}"


def run(argv: list[str]) -> tuple[int, str]:
    return execute(build_parser().parse_args(argv), argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    status, text = execute(args, argv)
    if status != 0:
        print(text, file=sys.stderr)
        return status
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

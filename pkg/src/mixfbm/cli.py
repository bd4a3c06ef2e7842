"""Command line interface.

Exit codes: 0 all declared checks passed, 1 a check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, MixFBMError
from .estimator import QEstimate
from .fredholm import build_family
from .harness import Experiment, ExperimentConfig, run_rate_experiment, write_rate_outputs
from .paths import SAMPLER_METHODS, SamplerConfig, TimeGrid, sample_mixed_path
from .sde import ModelSpec, ThetaSpec, limit_ode, simulate_X

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("mixfbm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_csv(path, header, columns) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def parse_theta(text: str) -> ThetaSpec:
    """``constant:a``, ``linear:a,b`` or ``sine:a,b,omega``."""
    form, _, args = text.partition(":")
    params = tuple(float(v) for v in args.split(",")) if args else ()
    try:
        return {"constant": ThetaSpec.constant, "linear": ThetaSpec.linear,
                "sine": ThetaSpec.sine}[form](*params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"cannot parse theta {text!r}; expected constant:a, linear:a,b or sine:a,b,w") from exc


def cmd_simulate(args) -> int:
    grid = TimeGrid(args.T, args.n)
    cfg = SamplerConfig(seed=args.seed, method=args.method)
    mixed, W, WH = sample_mixed_path(grid, args.H, cfg, rep_index=args.rep)
    model = ModelSpec(parse_theta(args.theta), args.x0, args.eps, args.H, grid)
    x = limit_ode(model)
    X = simulate_X(model, mixed, args.scheme)
    _write_csv(args.out, ["t", "W", "WH", "mixed", "x_limit", "X"],
               [grid.points, W.values, WH.values, mixed.values, x.values, X.values])
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_solve_kernel(args) -> int:
    grid = TimeGrid(args.T, args.n)
    fam = build_family(grid, args.H)
    out = Path(args.out)
    _write_csv(out / "g.csv", ["s", "g"], [grid.midpoints, fam.row(grid.n)])
    _write_csv(out / "qv.csv", ["t", "qv", "qv_density"], [grid.points, fam.qv, fam.qv_density])
    log.info("wrote %s/g.csv and %s/qv.csv", out, out)
    return EXIT_OK


def _config_with_overrides(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    data = cfg.to_dict()
    if getattr(args, "h_const", None) is not None:
        data["h_const"] = args.h_const
    if getattr(args, "kernel", None) is not None:
        data["kernel"] = {"epa": "epanechnikov"}.get(args.kernel, args.kernel)
    if getattr(args, "gamma", None) is not None:
        data["gamma"] = args.gamma
    if getattr(args, "eps", None) is not None:
        data["eps_list"] = (args.eps,)
    if getattr(args, "replications", None) is not None:
        data["replications"] = args.replications
    return ExperimentConfig.from_dict(data)


def cmd_estimate(args) -> int:
    cfg = _config_with_overrides(args)
    exp = Experiment(cfg)
    rep = exp.replicate(args.rep, [cfg.eps_list[0]])[0]
    est: QEstimate = rep.qhat
    _write_csv(args.out, ["t", "Qhat", "Qstar", "boundary_flag", "Z"],
               [exp.grid.points, est.values, rep.qstar.values,
                [str(int(b)) for b in est.boundary], rep.Z.values])
    log.info("eps=%g h=%.4g; wrote %s", rep.eps, est.h, args.out)
    return EXIT_OK


def cmd_rate_experiment(args) -> int:
    cfg = _config_with_overrides(args)
    report = run_rate_experiment(cfg, jobs=args.jobs)
    out = write_rate_outputs(report, cfg.grid(), args.out_dir)
    sys.stdout.write(report.summary())
    log.info("outputs in %s", out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mixfbm", description="Drift estimation for linear models driven by mixed fBm.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample one path of W, W^H, mixed noise and the state X")
    s.add_argument("--H", type=float, required=True)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rep", type=int, default=0, help="replication index within the seed")
    s.add_argument("--method", choices=SAMPLER_METHODS, default="cholesky_exact")
    s.add_argument("--theta", default="constant:0.5", help="constant:a | linear:a,b | sine:a,b,w")
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--scheme", choices=("exact_linear", "euler"), default="exact_linear")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("solve-kernel", help="solve the kernel equation on a grid")
    k.add_argument("--H", type=float, required=True)
    k.add_argument("--T", type=float, default=1.0)
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--out", required=True, help="output directory (g.csv, qv.csv)")
    k.set_defaults(func=cmd_solve_kernel)

    def estimator_flags(q):
        q.add_argument("--config", help="INI experiment config (defaults built in)")
        q.add_argument("--h-const", dest="h_const", type=float)
        q.add_argument("--kernel", choices=("epa", "epanechnikov", "uniform"))
        q.add_argument("--gamma", type=float)

    e = sub.add_parser("estimate", help="one replication: Z, Q* and the kernel estimate")
    estimator_flags(e)
    e.add_argument("--eps", type=float, help="noise level (default: first of eps_list)")
    e.add_argument("--rep", type=int, default=0)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    r = sub.add_parser("rate-experiment", help="Monte Carlo risk and rate over eps_list")
    estimator_flags(r)
    r.add_argument("--replications", type=int)
    r.add_argument("--jobs", type=int, default=1, help="worker threads")
    r.add_argument("--out-dir", dest="out_dir", required=True)
    r.set_defaults(func=cmd_rate_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MixFBMError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

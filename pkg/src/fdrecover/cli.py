"""
Command-line entry point.

Exit status is 0 on success, 1 for invalid input (bad arguments, malformed
CSV or JSON, violated preconditions) and 2 for failures at run time.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import InvalidInput
from .estimator import recover
from .experiments import RateStudyConfig, run_acf_check, run_compare, run_rate_study
from .factor_count import count_factors
from .simulation import SimConfig, simulate

log = logging.getLogger("fdrecover")

METHODS = {
    "er": "eigenvalue_ratio",
    "eigenvalue_ratio": "eigenvalue_ratio",
    "ic": "information_criterion",
    "information_criterion": "information_criterion",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInput(f"{self.prog}: {message}")


def _global_options(defaults: bool) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    default = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parent.add_argument("--seed", type=int, default=default(None), help="override the configuration seed")
    parent.add_argument("--threads", type=int, default=default(1), help="worker threads for replications")
    parent.add_argument("--output-dir", type=Path, default=default(Path(".")), help="where outputs are written")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdrecover", description="Simulate, recover and study noisy functional panels.", parents=[_global_options(True)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_global_options(False)]

    p = sub.add_parser("simulate", parents=common, help="simulate a panel from a SimConfig JSON")
    p.add_argument("config", type=Path)

    p = sub.add_parser("recover", parents=common, help="recover the signal from a panel CSV")
    p.add_argument("panel", type=Path)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-L", "--factors", type=int, dest="factors")
    g.add_argument("--auto-L", choices=sorted(METHODS), dest="auto_l")
    p.add_argument("--k-max", type=int)
    p.add_argument("--no-center", action="store_true")

    p = sub.add_parser("select-l", parents=common, help="estimate the number of factors of a panel CSV")
    p.add_argument("panel", type=Path)
    p.add_argument("--method", choices=sorted(METHODS), default="er")
    p.add_argument("--k-max", type=int)
    p.add_argument("--no-center", action="store_true")

    p = sub.add_parser("rates", parents=common, help="run a rate study from a RateStudyConfig JSON")
    p.add_argument("config", type=Path)

    p = sub.add_parser("acf-check", parents=common, help="autocovariance drift study")
    p.add_argument("config", type=Path)

    p = sub.add_parser("compare", parents=common, help="factor recovery versus local-linear smoothing")
    p.add_argument("config", type=Path)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--method", choices=sorted(METHODS), default="er")
    return parser


def _with_seed(cfg: SimConfig, seed):
    return cfg if seed is None else cfg.replace(seed=seed)


def _cmd_simulate(args, out: Path):
    cfg = _with_seed(SimConfig.from_dict(io.read_json(args.config)), args.seed)
    truth = simulate(cfg)
    io.write_panel(out / "observed.csv", truth.observed)
    io.write_panel(out / "signal.csv", truth.signal)
    io.write_panel(out / "noise.csv", truth.noise)
    io.write_json(
        out / "truth.json",
        {
            "config": cfg.to_dict(),
            "eigenvalues": truth.eigenvalues,
            "loadings": truth.loadings,
            "normalized_scores": truth.normalized_scores,
        },
    )


def _cmd_recover(args, out: Path):
    panel = io.read_panel(args.panel)
    center = not args.no_center
    count = None
    if args.auto_l:
        count = count_factors(panel, METHODS[args.auto_l], args.k_max, center=center)
        L = count.chosen
    else:
        L = args.factors
    fit, es = recover(panel, L, center=center)
    io.write_panel(out / "recovered.csv", fit.recovered)
    io.write_json(
        out / "fit.json",
        {
            "num_factors": fit.num_factors,
            "centered": fit.centered,
            "mean": fit.mean,
            "eigenvalues": es.eigenvalues,
            "scaled_eigenvalues": es.scaled,
            "scores": fit.scores,
            "loadings": fit.loadings,
            "warnings": list(fit.warnings),
            "factor_count": None if count is None else count.to_dict(),
        },
    )


def _cmd_select_l(args, out: Path):
    panel = io.read_panel(args.panel)
    result = count_factors(panel, METHODS[args.method], args.k_max, center=not args.no_center)
    io.write_json(out / "factor_count.json", result.to_dict())


def _study(args) -> RateStudyConfig:
    cfg = RateStudyConfig.from_dict(io.read_json(args.config))
    if args.seed is not None:
        cfg = RateStudyConfig(**{**cfg.__dict__, "base": cfg.base.replace(seed=args.seed)})
    return cfg


def _cmd_rates(args, out: Path):
    result = run_rate_study(_study(args), threads=args.threads)
    io.write_json(out / "rates.json", result.to_dict())
    io.write_rows(out / "rates.csv", ["which", "t", "p", "l", "replication", "seed", "value"], result.long_rows())
    log.info("slope %s", result.slope)


def _cmd_acf_check(args, out: Path):
    cfg = _study(args)
    rows = run_acf_check(cfg, threads=args.threads)
    io.write_json(out / "acf.json", {"config": cfg.to_dict(), "rows": rows})
    keys = ["t", "p", "lag", "median", "q25", "q75"]
    io.write_rows(out / "acf.csv", keys, ([r[k] for k in keys] for r in rows))


def _cmd_compare(args, out: Path):
    cfg = _with_seed(SimConfig.from_dict(io.read_json(args.config)), args.seed)
    rows = run_compare(cfg, args.replications, args.threads, METHODS[args.method])
    keys = ["replication", "seed", "l_hat", "factor_mse", "smoother_mse", "factor_sup", "smoother_sup"]
    io.write_rows(out / "compare.csv", keys, ([r[k] for k in keys] for r in rows))
    wins = float(np.mean([r["factor_mse"] < r["smoother_mse"] for r in rows]))
    io.write_json(
        out / "compare.json",
        {
            "config": cfg.to_dict(),
            "replications": args.replications,
            "factor_win_fraction": wins,
            "median_factor_mse": float(np.median([r["factor_mse"] for r in rows])),
            "median_smoother_mse": float(np.median([r["smoother_mse"] for r in rows])),
        },
    )


COMMANDS = {
    "simulate": _cmd_simulate,
    "recover": _cmd_recover,
    "select-l": _cmd_select_l,
    "rates": _cmd_rates,
    "acf-check": _cmd_acf_check,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise InvalidInput("--threads must be >= 1")
        out = args.output_dir
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

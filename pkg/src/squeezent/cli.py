"""Command-line entry point: ``squeezent <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 solver did not converge,
3 truncation-tail check failed.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .errors import ConfigError, ModelError, SolverError, TruncationError
from .models import PhysicalParams

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_TRUNCATION = 0, 1, 2, 3


def _common(p):
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--out", metavar="PATH", help="CSV output path ('-' for stdout)")
    p.add_argument("--model", choices=["full", "effective", "network"])
    p.add_argument("--n-max", type=int, dest="n_max", help="Fock cutoff of each cavity mode")
    p.add_argument("--tol", type=float, help="relative residual tolerance of the steady-state solve")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squeezent",
                                     description="Entangling atoms with squeezed light: steady states and sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "steady": "steady state per (epsilon, N) grid point",
        "sweep-eps": "EoF over the epsilon x N grid, with optional filtering",
        "position-avg": "EoF averaged over Gaussian atomic position spread",
        "transfer": "atomic EoF against the EoF of the squeezed light",
        "validate-elim": "full cavity model against the eliminated model at g and g/2",
        "network": "three-node chain and the node-B measurement",
    }
    for name, h in helps.items():
        _common(sub.add_parser(name, help=h, description=h))
    return parser


def _overrides(args) -> dict:
    over = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    for key in ("model", "n_max", "tol", "out"):
        val = getattr(args, key)
        if val is not None:
            over[key] = val
    return over


def _validate_rows(cfg):
    if cfg.model == "network":
        raise ConfigError("validate-elim compares the full and effective models")
    rows = []
    for eps in cfg.epsilon:
        for N in cfg.N:
            phys = PhysicalParams.from_epsilon(eps, g=cfg.g)
            rep = ex.validate_elimination(phys, cfg.squeezing(N), cfg.n_max_list, cfg.solver, cfg.tail_tol)
            for r in rep.rows:
                rows.append({"epsilon": eps, "N": N, **r, "ratio": rep.ratio})
    return rows


def run(args) -> list:
    cfg = ex.load_config(args.config, _overrides(args))
    cmd = args.command
    if cmd == "steady":
        return ex.steady_rows(cfg)
    if cmd == "sweep-eps":
        return ex.sweep_epsilon(cfg)
    if cmd == "position-avg":
        return ex.position_rows(cfg)
    if cmd == "transfer":
        return ex.transfer_curve(cfg)
    if cmd == "validate-elim":
        return _validate_rows(cfg)
    if cmd == "network":
        rows = []
        for eps in cfg.epsilon:
            for N in cfg.N:
                m = None if cfg.M == "perfect" else float(cfg.M)
                rows += [{"epsilon": eps, **r} for r in ex.network_rows(ex.run_network(N, eps, m, tol=cfg.tol))]
        return rows
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rows = run(args)
        out = args.out
        if out is None:
            out = ex.load_config(args.config, _overrides(args)).out
        text = ex.write_csv(rows, out)
        if out in (None, "", "-"):
            sys.stdout.write(text)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

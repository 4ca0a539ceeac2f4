"""Command-line interface: ``stochslam {run, ensemble, scenario-dump, verify}``.

Successful commands exit 0 and print a one-line JSON summary to stdout.
Failures print ``{"error": ..., "type": ..., ...}`` on one line to stderr
and exit nonzero (2 for configuration problems, 3 for divergence, 4 for
I/O, 1 for a failed ``verify``).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .exceptions import ConfigError, DivergenceError, StochSlamError
from .harness.config import OUTPUT_ENV, default_paper_scenario, load, serialize
from .harness.output import OutputError, emit_csv, emit_ensemble_csv
from .harness.runner import run_ensemble, run_single

EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4

VARIANTS = {"bias-skew-includes-p": "bias_skew_includes_position"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("cli_arguments", message)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ConfigError("variant", f"expected a boolean, got {text!r}")


def _variant(text: str):
    name, sep, value = text.partition("=")
    if not sep or name not in VARIANTS:
        raise ConfigError("variant", f"expected one of {sorted(VARIANTS)} as NAME=<bool>, got {text!r}")
    return VARIANTS[name], _bool(value)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stochslam", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sim_flags(sp):
        sp.add_argument("--config", type=Path, help="configuration file (defaults to the reference scenario)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path, help=f"output directory (else config, ${OUTPUT_ENV}, ./out)")
        sp.add_argument("--duration", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--variant", action="append", default=[], metavar="NAME=BOOL")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--decimation", type=int)
        g.add_argument("--raw", action="store_true", help="log every step (decimation 1)")
        sp.add_argument("--quiet", action="store_true", help="suppress the JSON summary")

    sim_flags(sub.add_parser("run", help="simulate one run and write CSV files"))
    ens = sub.add_parser("ensemble", help="Monte Carlo ensemble with envelope fit")
    sim_flags(ens)
    ens.add_argument("--ensemble", type=int, help="number of runs")
    ens.add_argument("--workers", type=int)
    dump = sub.add_parser("scenario-dump", help="print the reference configuration")
    dump.add_argument("--config", type=Path, help="print this file normalized instead")
    ver = sub.add_parser("verify", help="run the acceptance criteria")
    ver.add_argument("--only", nargs="+", metavar="ID", help="subset of criteria, e.g. A2 A7")
    return p


def _config(args):
    cfg = load(args.config) if args.config else default_paper_scenario()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.duration is not None:
        kw["duration"] = args.duration
    if args.dt is not None:
        kw["dt"] = args.dt
    if args.raw:
        kw["decimation"] = 1
    elif args.decimation is not None:
        kw["decimation"] = args.decimation
    if getattr(args, "ensemble", None) is not None:
        kw["ensemble_size"] = args.ensemble
    for v in args.variant:
        name, value = _variant(v)
        kw[name] = value
    return cfg.replace(**kw) if kw else cfg


def output_dir(args, cfg) -> Path:
    if args.out is not None:
        return args.out
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV) or "out")


def _emit(args, payload: dict) -> None:
    if not getattr(args, "quiet", False):
        print(json.dumps(payload))


def cmd_run(args) -> int:
    cfg = _config(args)
    out = run_single(cfg)
    files = emit_csv(out, output_dir(args, cfg))
    _emit(args, {
        "command": "run", "seed": cfg.seed, "steps": cfg.n_steps, "samples": out.sample_count,
        "tail_mean_position_err": out.summary["position"]["mean"],
        "tail_mean_lyapunov": out.summary["lyapunov"]["mean"],
        "files": [str(f) for f in files],
    })
    return 0


def cmd_ensemble(args) -> int:
    cfg = _config(args)
    res = run_ensemble(cfg, workers=args.workers)
    path = emit_ensemble_csv(res, output_dir(args, cfg))
    _emit(args, {
        "command": "ensemble", "size": res.size, "v0": res.v0, "tail_mean_lyapunov": res.tail_mean_lyapunov(),
        "fit": {"c": res.fit.c, "k_over_c": res.fit.k_over_c, "accepted": res.fit.accepted,
                "max_ratio": res.fit.max_ratio},
        "sigma_hat_min": res.sigma_min, "file": str(path),
    })
    return 0


def cmd_dump(args) -> int:
    cfg = load(args.config) if args.config else default_paper_scenario()
    sys.stdout.write(serialize(cfg))
    return 0


def cmd_verify(args) -> int:
    from .harness.acceptance import CHECKS, run_all

    ids = args.only or list(CHECKS)
    unknown = [i for i in ids if i not in CHECKS]
    if unknown:
        raise ConfigError("criteria", f"unknown criteria {unknown}; known {list(CHECKS)}")
    passed = []
    for res in run_all(ids):
        print(res.line(), flush=True)
        passed.append(res.passed)
    print(json.dumps({"command": "verify", "passed": sum(passed), "total": len(passed)}))
    return 0 if all(passed) else EXIT_VERIFY_FAILED


COMMANDS = {"run": cmd_run, "ensemble": cmd_ensemble, "scenario-dump": cmd_dump, "verify": cmd_verify}


def _fail(exc: Exception, code: int) -> int:
    info = {"error": str(exc), "type": type(exc).__name__}
    for attr in ("constraint", "step", "quantity", "run_index", "equation"):
        if getattr(exc, attr, None) is not None:
            info[attr] = getattr(exc, attr)
    if isinstance(exc, OutputError):
        info["path"] = str(exc.path)
    print(json.dumps(info, default=str), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except DivergenceError as exc:
        return _fail(exc, EXIT_DIVERGENCE)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except StochSlamError as exc:
        return _fail(exc, EXIT_DIVERGENCE)


def entry() -> None:
    sys.exit(main())

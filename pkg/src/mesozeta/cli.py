"""Command-line front end.

Subcommands: sieve, zeta, sample-model, max, moment, decouple, clt,
ballot, report.  Experiment flags mirror ExperimentConfig; a JSON config
file can seed any experiment subcommand, with flags overriding file keys
and unknown file keys rejected.  Exit codes: 0 success, 1 runtime
failure, 2 usage error.  Progress goes to stderr, data to stdout/files.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .experiments import (ExperimentConfig, ExperimentError, RunResult,
                          read_manifest, write_run)

_EXPERIMENT_KEYS = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
_TUPLE_KEYS = {"y_grid", "fit_range"}


def _add_experiment_flags(p: argparse.ArgumentParser, default_target: str) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--target", choices=["zeta", "model", "gaussian-brw"],
                   default=None, help=f"evaluation target (default {default_target})")
    p.add_argument("--T", type=float, help="height scale T (zeta target), tau ~ U[T,2T]")
    p.add_argument("--prime-limit", type=int, dest="prime_limit",
                   help="sieve limit (model target)")
    p.add_argument("--theta", type=float, default=None,
                   help="window exponent in (-1, 0]; width is (log T)^theta")
    p.add_argument("--spacing", type=float, dest="grid_spacing",
                   help="h-grid spacing (default 0.05/log T)")
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples")
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--workers", type=int, default=None, help="worker processes")
    p.add_argument("--out", dest="outdir", help="run directory to write")
    p.add_argument("--overwrite", action="store_true",
                   help="allow writing into a non-empty run directory")
    p.add_argument("--depth", type=int, dest="brw_depth", help="BRW depth")
    p.add_argument("--branching", type=int, dest="brw_branching",
                   help="BRW branching factor")
    p.add_argument("--event-y", type=float, dest="event_y",
                   help="barrier level used for recorded event flags")


def _add_ballot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, dest="ballot_n", help="walk length")
    p.add_argument("--A", type=float, dest="ballot_A", help="barrier offset")
    p.add_argument("--V", type=float, dest="ballot_V", help="terminal level")
    p.add_argument("--t1-fraction", type=float, dest="ballot_t1_fraction")
    p.add_argument("--log-coeff", type=float, dest="ballot_log_coeff")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mesozeta",
        description="Monte Carlo laboratory for zeta extreme values on "
                    "mesoscopic windows")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", help="sieve primes and optionally cache them")
    p.add_argument("--limit", type=int, required=True, help="inclusive sieve bound")
    p.add_argument("--cache", help="write a binary prime cache to this path")

    p = sub.add_parser("zeta", help="critical-line zeta evaluation")
    zsub = p.add_subparsers(dest="zeta_command", required=True)
    pe = zsub.add_parser("eval", help="print t, Z(t), |zeta|, error bound as CSV")
    pe.add_argument("--t", type=float, required=True, help="height t >= 0")

    p = sub.add_parser("sample-model", help="print model walk samples at h=0")
    p.add_argument("--prime-limit", type=int, required=True, dest="prime_limit")
    p.add_argument("--k", type=float, default=None,
                   help="scale cut (default: full table scale)")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    defaults = {"max": "model", "moment": "model", "decouple": "model",
                "clt": "model", "ballot": "gaussian-brw"}
    helps = {"max": "maximum of the centered field over the window",
             "moment": "second moment Z_2 and its regression on S_ttheta(0)",
             "decouple": "max_h |S_ttheta(h) - S_ttheta(0)| tail discrimination",
             "clt": "KS check of S_ttheta(0) against the normal law",
             "ballot": "barrier-event frequencies vs the DP oracle"}
    for name in ("max", "moment", "decouple", "clt", "ballot"):
        p = sub.add_parser(name, help=helps[name])
        _add_experiment_flags(p, defaults[name])
        if name == "ballot":
            _add_ballot_flags(p)

    p = sub.add_parser("report", help="summarize an existing run directory")
    p.add_argument("--run", required=True, help="run directory with manifest.json")
    return ap


_HARD_DEFAULTS = {
    "theta": 0.0,
    "samples": 100,
    "seed": 0,
    "workers": 1,
}


def config_from_args(args: argparse.Namespace, default_target: str) -> ExperimentConfig:
    """Merge JSON config file (if any) with CLI flags; flags win."""
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - _EXPERIMENT_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update(file_cfg)
    for key in _EXPERIMENT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "overwrite", False):
        pass  # not a config key
    data.setdefault("target", default_target)
    for key, val in _HARD_DEFAULTS.items():
        data.setdefault(key, val)
    for key in _TUPLE_KEYS:
        if key in data:
            data[key] = tuple(data[key])
    return ExperimentConfig(**data)


def _emit_run(result: RunResult, args: argparse.Namespace) -> None:
    if result.config.outdir:
        write_run(result, result.config.outdir, overwrite=args.overwrite)
        print(f"run written to {result.config.outdir}", file=sys.stderr)
    print(json.dumps(experiments._json_safe(result.report), sort_keys=True))


def execute(args: argparse.Namespace) -> int:
    """Run a parsed invocation; returns the process exit code."""
    if args.command == "sieve":
        from .primes import sieve_primes
        table = sieve_primes(args.limit)
        print(f"{len(table)} primes <= {args.limit}")
        if args.cache:
            table.save_cache(args.cache)
            print(f"cache written to {args.cache}", file=sys.stderr)
        return 0

    if args.command == "zeta":
        from .zeta import zeta_critical
        s = zeta_critical(args.t)
        print("t,Z,abs_zeta,error_bound")
        print(f"{s.t:.17g},{s.z_value:.17g},{s.abs_zeta:.17g},{s.error_estimate:.17g}")
        return 0

    if args.command == "sample-model":
        from .models import model_sums_h0, derive_stream
        from .primes import sieve_primes
        import numpy as np
        table = sieve_primes(args.prime_limit)
        k = args.k if args.k is not None else table.max_scale
        seeds = np.array([derive_stream(args.seed, i) for i in range(args.samples)],
                         np.uint64)
        vals = model_sums_h0(table, k, seeds)
        print("index,stream_seed,value")
        for i in range(args.samples):
            print(f"{i},{int(seeds[i])},{vals[i]:.17g}")
        return 0

    if args.command == "report":
        man = read_manifest(args.run)
        cfg = man["config"]
        print(f"run: {args.run}")
        print(f"experiment: {man['report'].get('experiment', '?')}  "
              f"target: {cfg['target']}  samples: {cfg['samples']}  "
              f"seed: {cfg['seed']}  excluded: {man['excluded']}")
        for key, val in sorted(man["report"].items()):
            if key != "experiment":
                print(f"  {key}: {val}")
        return 0

    runners = {"max": experiments.run_max_experiment,
               "moment": experiments.run_moment_experiment,
               "decouple": experiments.run_decoupling_experiment,
               "clt": experiments.run_clt_check,
               "ballot": experiments.run_ballot_comparison}
    defaults = {"max": "model", "moment": "model", "decouple": "model",
                "clt": "model", "ballot": "gaussian-brw"}
    cfg = config_from_args(args, defaults[args.command])
    print(f"{args.command}: target={cfg.target} samples={cfg.samples} "
          f"theta={cfg.theta} seed={cfg.seed}", file=sys.stderr)
    result = runners[args.command](cfg)
    _emit_run(result, args)
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return execute(args)
    except (ValueError, FileExistsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        idx = f" (sample {exc.sample_index})" if exc.sample_index is not None else ""
        print(f"run failed{idx}: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())

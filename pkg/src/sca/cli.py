"""Command-line driver: ``sca {da,dg,bench,synth,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .data import SynthSpec, gen_synthetic, save_csv, shifted_grid_spec
from .errors import ConfigError, ScaError
from .experiments import ExperimentConfig, run_da, run_dg, run_scaling_bench
from .verify import run_checks


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _append_jsonl(path, record):
    if path is None:
        return
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _experiment_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    config = ExperimentConfig.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.variant is not None:
        overrides["variant"] = args.variant
    if args.grid_k is not None:
        overrides["grid_k"] = args.grid_k
    if args.grid_beta is not None:
        overrides["grid_beta"] = args.grid_beta
    if args.grid_delta is not None:
        overrides["grid_delta"] = args.grid_delta
    return replace(config, **overrides) if overrides else config


def _cmd_experiment(args):
    runner = run_da if args.command == "da" else run_dg
    config = _experiment_config(args)
    seeds = [config.seed] if args.seeds is None else list(range(config.seed, config.seed + args.seeds))
    for i, seed in enumerate(seeds):
        report = runner(replace(config, seed=seed))
        if i == 0:
            print(f"{'task':<16} {'var':<5} hyper-parameters                  target 1NN       raw 1NN      timings")
        print(report.summary_line())
        _append_jsonl(args.out, report.to_dict())
    return 0


def _cmd_bench(args):
    result = run_scaling_bench(args.sizes, repeats=args.repeats, k=args.k, seed=args.seed or 0)
    print(f"{'n':>6}  {'assembly s':>11}  {'fit s':>9}")
    for n, a, f in zip(result.sizes, result.assembly_seconds, result.fit_seconds):
        print(f"{n:>6}  {a:>11.4f}  {f:>9.4f}")
    print(f"log-log slope: assembly {result.assembly_slope:.3f}, full fit {result.fit_slope:.3f}")
    if result.partial:
        print("warning: benchmark stopped early (out of memory)")
    _append_jsonl(args.out, result.to_dict())
    return 0


def _cmd_synth(args):
    spec = SynthSpec.load(args.config) if args.config else shifted_grid_spec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.out is None:
        raise ConfigError("--out is required for synth")
    data = gen_synthetic(spec)
    save_csv(data, args.out)
    if args.spec_out:
        spec.save(args.spec_out)
    print(f"wrote {data.n} samples in {len(data.domain_order)} domains to {args.out}")
    return 0


def _cmd_verify(args):
    results = run_checks(seed=args.seed or 0, trials=args.trials)
    for r in results:
        print(r.line())
        _append_jsonl(args.out, {"check": r.name, "passed": r.passed, "worst": r.worst, "tolerance": r.tolerance})
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="sca", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver notes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="append JSON lines to this file")

    for name, help_text in (("da", "domain adaptation experiment"), ("dg", "domain generalization experiment")):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--variant", choices=["sca", "usca", "kpca", "kfd"])
        p.add_argument("--grid-k", type=_ints, help="comma-separated, e.g. 2,4,8")
        p.add_argument("--grid-beta", type=_floats)
        p.add_argument("--grid-delta", type=_floats)
        p.add_argument("--seeds", type=int, help="run this many consecutive seeds starting at --seed")

    p = sub.add_parser("bench", help="time operator assembly and fitting against n")
    common(p)
    p.add_argument("--sizes", type=_ints, default=[250, 500, 1000, 2000])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--k", type=int, default=10)

    p = sub.add_parser("synth", help="write a synthetic Gaussian-cluster dataset as CSV")
    common(p)
    p.add_argument("--spec-out", help="also write the generator spec used")

    p = sub.add_parser("verify", help="run the scatter-identity and eigenproblem checks")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    return parser


COMMANDS = {"da": _cmd_experiment, "dg": _cmd_experiment, "bench": _cmd_bench, "synth": _cmd_synth, "verify": _cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScaError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

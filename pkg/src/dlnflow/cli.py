"""Command-line harness.

Three subcommands: `run` executes a depth-sweep experiment from a JSON config
(any config field overridable by a flag of the same name), `verify` runs the
randomized invariant checks for a module scope, and `synth` prints a scatter
pair as JSON. Exit codes: 0 success, 1 invariant failure, 2 invalid config,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness, scatter

EXIT_OK = 0
EXIT_INVARIANT_FAILURE = 1
EXIT_INVALID_CONFIG = 2
EXIT_IO_FAILURE = 3


def _parse_spread(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise harness.ConfigError(f"spread must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_depths(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _parse_init(text: str):
    if text == "ones":
        return "ones"
    return tuple(float(x) for x in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlnflow",
        description="Gradient descent and gradient flow of the quotient loss on deep diagonal linear networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a depth-sweep descent experiment from a JSON config")
    run.add_argument("--config", required=True, help="path to the JSON config document")
    run.add_argument("--dim", type=int)
    run.add_argument("--depths", type=_parse_depths, help="comma-separated depth list, e.g. 1,2,5")
    run.add_argument("--eta", type=float)
    run.add_argument("--epochs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--spread", type=_parse_spread, help="lo,hi")
    run.add_argument("--init_magnitudes", type=_parse_init, help="'ones' or comma-separated positives")
    run.add_argument("--record_every", type=int)
    run.add_argument("--output_dir")
    run.add_argument("--format", choices=harness.FORMATS)

    verify = sub.add_parser("verify", help="run randomized invariant checks")
    verify.add_argument("--scope", default="all", choices=harness.SCOPES)
    verify.add_argument("--trials", type=int, default=100)
    verify.add_argument("--seed", type=int, default=0)

    synth = sub.add_parser("synth", help="print a synthesized scatter pair as JSON")
    synth.add_argument("--dim", type=int, required=True)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--spread", type=_parse_spread, default=(0.4, 0.6), help="lo,hi")
    return parser


def _cmd_run(args) -> int:
    config = harness.load_config(args.config)
    overrides = {
        name: getattr(args, name)
        for name in ("dim", "depths", "eta", "epochs", "seed", "spread",
                     "init_magnitudes", "record_every", "output_dir", "format")
        if getattr(args, name) is not None
    }
    if overrides:
        doc = config.to_json_dict()
        doc.update(overrides)
        config = harness.ExperimentConfig(**doc)
    artifact = harness.run_experiment(config)
    for rec in artifact.depths:
        status = "ok" if rec.termination_reason is None else rec.termination_reason
        print(
            f"L={rec.depth}: {rec.rows} rows -> {rec.table_path} "
            f"[{status}] final loss {rec.final_loss:.6g} "
            f"(gap to lambda_min {rec.final_loss_gap:.3e}, "
            f"quasi-norm drift {rec.conservation.max_relative_drift:.3e})"
        )
    print(f"artifact: {config.output_dir}/artifact.json")
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = harness.verify_suite(args.scope, args.trials, args.seed)
    for line in report.lines():
        print(line)
    if not report.passed:
        print(f"verification failed for scope {report.scope!r}", file=sys.stderr)
        return EXIT_INVARIANT_FAILURE
    print(f"all {len(report.checks)} checks passed (scope {report.scope!r}, {report.trials} trials)")
    return EXIT_OK


def _cmd_synth(args) -> int:
    pair = scatter.synthesize_scatter(args.dim, args.seed, args.spread)
    print(scatter.pair_to_json(pair, args.seed, args.spread))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, which matches the config code.
        return EXIT_INVALID_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_synth(args)
    except (harness.ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO_FAILURE


if __name__ == "__main__":
    sys.exit(main())

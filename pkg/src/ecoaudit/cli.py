"""Command-line front end.

Reports go to standard output as deterministic JSON unless ``--out`` is
given; ``--plot-data`` additionally writes a tidy CSV. Data and validation
errors exit 1 with a single ``CODE: message`` line on stderr; usage errors
exit 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .conditional import conditional_profiles
from .distributions import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_DELTA_GRID,
    fit_difficulty,
    parse_grid,
)
from .errors import EcoAuditError
from .ingest import load_metadata, load_votes, parse_records, write_records_csv
from .matrix import POLICY_DROP, POLICY_STRICT, build_failure_matrix
from .reports import ecosystem_report, plot_csv_bytes, report_json_bytes
from .strata import (
    DISAGREEMENT_KEY,
    METADATA_DROP,
    METADATA_STRICT,
    derive_disagreement_stratum,
    stratify,
)
from .synth import SynthSpec, generate
from .temporal import (
    DEFAULT_IMPROVEMENT_THRESHOLD,
    decline_analysis,
    detect_improvements,
    improvement_analysis,
)


def _rates(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rates {text!r}") from None


def _grid(text: str) -> tuple[float, ...]:
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _models(text: str) -> tuple[str, ...]:
    ids = tuple(m for m in text.split(",") if m)
    if not ids:
        raise argparse.ArgumentTypeError("empty model list")
    return ids


def _series(text: str) -> tuple[str, ...]:
    return tuple(s for s in text.split(",") if s)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="prediction log path")
    p.add_argument(
        "--format",
        dest="log_format",
        choices=("csv", "jsonl"),
        default=None,
        help="input format; inferred from the extension when omitted",
    )
    p.add_argument("--models", type=_models, default=None,
                   help="comma-separated model filter")
    p.add_argument(
        "--policy",
        choices=(POLICY_STRICT, POLICY_DROP),
        default=POLICY_STRICT,
        help="coverage policy for instances missing some model",
    )


def _add_output_flags(p: argparse.ArgumentParser, plot: bool = True) -> None:
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    if plot:
        p.add_argument("--plot-data", dest="plot_data", default=None,
                       help="also write tidy series,x,y CSV to this path")
        p.add_argument("--series", type=_series, default=None,
                       help="comma-separated plot series selection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecoaudit",
        description="Ecosystem-level analysis of multi-model prediction logs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="observed vs baseline for one period")
    _add_input_flags(p)
    p.add_argument("--period", required=True)
    _add_output_flags(p)

    p = sub.add_parser("improvements", help="year-over-year change analysis")
    _add_input_flags(p)
    p.add_argument("--from", dest="period_from", required=True)
    p.add_argument("--to", dest="period_to", required=True)
    p.add_argument("--threshold", type=float,
                   default=DEFAULT_IMPROVEMENT_THRESHOLD,
                   help="minimum absolute accuracy gain to detect")
    p.add_argument("--model", default=None,
                   help="analyze this model's change instead of detecting")
    p.add_argument("--declines", action="store_true",
                   help="analyze the model's new failures instead")
    p.add_argument("--net", action="store_true",
                   help="include the net series in plot data")
    _add_output_flags(p)

    p = sub.add_parser("condition", help="profiles conditioned on one failure")
    _add_input_flags(p)
    p.add_argument("--period", required=True)
    p.add_argument("--model", required=True)
    _add_output_flags(p)

    p = sub.add_parser("stratify", help="per-group analysis over metadata")
    _add_input_flags(p)
    p.add_argument("--period", required=True)
    p.add_argument("--by", dest="metadata_key", default=None,
                   help="metadata key to stratify on")
    p.add_argument("--metadata", default=None,
                   help="side metadata JSONL (instance_id + flat string map)")
    p.add_argument("--votes", default=None,
                   help="annotator votes JSONL; derives the "
                        f"{DISAGREEMENT_KEY!r} stratum")
    p.add_argument("--metadata-policy", choices=(METADATA_STRICT, METADATA_DROP),
                   default=METADATA_STRICT)
    _add_output_flags(p)

    p = sub.add_parser("fit-difficulty", help="grid-fit the two-population baseline")
    _add_input_flags(p)
    p.add_argument("--period", required=True)
    p.add_argument("--alpha-grid", type=_grid, default=DEFAULT_ALPHA_GRID,
                   help="start:stop:step (default 0.1:0.5:0.1)")
    p.add_argument("--delta-grid", type=_grid, default=DEFAULT_DELTA_GRID,
                   help="start:stop:step (default 0.2:5:0.2)")
    _add_output_flags(p, plot=False)

    p = sub.add_parser("simulate", help="generate a synthetic prediction log")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rates", type=_rates, required=True)
    p.add_argument("--mode", choices=("independent", "two_population", "clone"),
                   default="independent")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--period", default="p1")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    return parser


def _emit(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(out).write_bytes(data)


def _load(args):
    return parse_records(args.input, args.log_format).records


def _cmd_analyze(args) -> None:
    eco = build_failure_matrix(_load(args), args.period, args.models, args.policy)
    report = ecosystem_report(eco)
    _emit(report_json_bytes(report), args.out)
    if args.plot_data:
        _emit(plot_csv_bytes(report, args.series), args.plot_data)


def _cmd_improvements(args) -> None:
    records = _load(args)
    if args.model is None:
        detected = detect_improvements(
            records, args.period_from, args.period_to,
            args.threshold, args.models, args.policy,
        )
        payload = {
            "report": "improvement_detection",
            "period_from": args.period_from,
            "period_to": args.period_to,
            "threshold": args.threshold,
            "detected": detected,
        }
        _emit(report_json_bytes(payload), args.out)
        return
    analyze = decline_analysis if args.declines else improvement_analysis
    report = analyze(records, args.model, args.period_from, args.period_to,
                     args.models, args.policy)
    _emit(report_json_bytes(report), args.out)
    if args.plot_data:
        series = args.series
        if series is None and args.net:
            series = ("potential", "observed", "net")
        _emit(plot_csv_bytes(report, series), args.plot_data)


def _cmd_condition(args) -> None:
    eco = build_failure_matrix(_load(args), args.period, args.models, args.policy)
    report = conditional_profiles(eco, args.model)
    _emit(report_json_bytes(report), args.out)
    if args.plot_data:
        _emit(plot_csv_bytes(report, args.series), args.plot_data)


def _cmd_stratify(args) -> None:
    result = parse_records(args.input, args.log_format)
    metadata = result.metadata
    if args.metadata:
        metadata = metadata.merge(load_metadata(args.metadata))
    key = args.metadata_key
    if args.votes:
        metadata = metadata.merge(derive_disagreement_stratum(load_votes(args.votes)))
        key = key or DISAGREEMENT_KEY
    if key is None:
        raise EcoAuditError("stratify needs --by (or --votes)")
    report = stratify(
        result.records, metadata, args.period, key,
        models=args.models, policy=args.metadata_policy,
        coverage_policy=args.policy,
    )
    _emit(report_json_bytes(report), args.out)
    if args.plot_data:
        _emit(plot_csv_bytes(report, args.series), args.plot_data)


def _cmd_fit_difficulty(args) -> None:
    eco = build_failure_matrix(_load(args), args.period, args.models, args.policy)
    fit = fit_difficulty(eco, args.alpha_grid, args.delta_grid)
    grid = [
        {"alpha": a, "delta": d, "l1": l1, "valid": l1 is not None}
        for (a, d), l1 in fit.surface.items()
    ]
    payload = {
        "report": "difficulty_fit",
        "period": args.period,
        "n_instances": eco.n_instances,
        "alpha": fit.params.alpha,
        "delta": fit.params.delta,
        "l1": fit.l1,
        "tv": 0.5 * fit.l1,
        "grid": grid,
    }
    _emit(report_json_bytes(payload), args.out)


def _cmd_simulate(args) -> None:
    spec = SynthSpec(
        n_instances=args.n,
        rates=args.rates,
        seed=args.seed,
        mode=args.mode,
        alpha=args.alpha,
        delta=args.delta,
    )
    records, metadata = generate(spec, args.period)
    if args.out is None:
        write_records_csv(records, sys.stdout.buffer, metadata)
        sys.stdout.buffer.flush()
    else:
        write_records_csv(records, args.out, metadata)


_COMMANDS = {
    "analyze": _cmd_analyze,
    "improvements": _cmd_improvements,
    "condition": _cmd_condition,
    "stratify": _cmd_stratify,
    "fit-difficulty": _cmd_fit_difficulty,
    "simulate": _cmd_simulate,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args)
    except EcoAuditError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"{exc.code}: {msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"IO_ERROR: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line entry points.

Subcommands: ``serve`` (WebSocket session service), ``simulate`` (run a
cohort study from a JSON config), ``analyze`` (turn a study dataset into
CSVs and figures), ``validate`` (check a piece file), and ``exam-gen``
(write a randomized-pitch exam for a piece). Exit codes: 0 success, 1
failure with a diagnostic, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics, reports
from .curriculum import randomize_pitches
from .scorefile import (
    CurriculumError,
    ParseError,
    PieceValidationError,
    builtin_manifest_path,
    parse_piece,
    serialize_piece,
)
from .simulate import dataset_from_json, dataset_to_json, load_cohort_config, run_cohort


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainbowscore",
        description="Colored-notation sight-playing tutor: service, simulator, analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the WebSocket session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--curriculum", type=Path, default=None, help="manifest JSON (default: built-in corpus)"
    )
    serve.add_argument("--data-dir", type=Path, default=Path("data"))
    serve.add_argument("--seed", type=int, default=0, help="seed for randomized exams")
    serve.add_argument(
        "--group", choices=("interactive", "static", "both"), default="both",
        help="which learning modes this deployment exposes",
    )

    simulate = sub.add_parser("simulate", help="run a simulated cohort study")
    simulate.add_argument("cohort", type=Path, help="cohort config JSON")
    simulate.add_argument("--out", type=Path, default=Path("study"), help="output directory")
    simulate.add_argument("--seed", type=int, default=None, help="override the master seed")

    analyze = sub.add_parser("analyze", help="compute study statistics and figures")
    analyze.add_argument("dataset", type=Path, help="dataset JSON from `simulate`")
    analyze.add_argument("--out-dir", type=Path, default=None, help="default: dataset directory")

    validate = sub.add_parser("validate", help="parse and validate a piece file")
    validate.add_argument("piece", type=Path)

    examgen = sub.add_parser("exam-gen", help="write a randomized-pitch exam for a piece")
    examgen.add_argument("piece", type=Path)
    examgen.add_argument("--seed", type=int, required=True)
    examgen.add_argument("--out", type=Path, default=None)

    return parser


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        text = args.piece.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.piece}: {exc}", file=sys.stderr)
        return 1
    try:
        piece = parse_piece(text, fallback_id=args.piece.stem)
    except (ParseError, PieceValidationError) as exc:
        print(f"error: {args.piece}: {exc}", file=sys.stderr)
        return 1
    from .notation import Severity, validate_piece

    warnings = [v for v in validate_piece(piece) if v.severity is Severity.WARNING]
    for warning in warnings:
        print(f"warning: {warning.code}: {warning.message}")
    print(f"{piece.id}: {len(piece.notes)} notes, {piece.measure_count} measures, ok")
    return 0


def _cmd_exam_gen(args: argparse.Namespace) -> int:
    try:
        piece = parse_piece(args.piece.read_text(encoding="utf-8"), fallback_id=args.piece.stem)
    except (OSError, ParseError, PieceValidationError) as exc:
        print(f"error: {args.piece}: {exc}", file=sys.stderr)
        return 1
    exam = randomize_pitches(piece, args.seed)
    out = args.out or args.piece.with_name(f"{args.piece.stem}-exam{args.seed}.rbs")
    out.write_text(serialize_piece(exam), encoding="utf-8")
    print(out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_cohort_config(args.cohort)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cohort config {args.cohort}: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, master_seed=args.seed)
    try:
        dataset = run_cohort(config)
    except (CurriculumError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    args.out.mkdir(parents=True, exist_ok=True)
    dataset_path = args.out / "dataset.json"
    dataset_path.write_text(dataset_to_json(dataset), encoding="utf-8")
    from .curriculum import write_exam_csv

    write_exam_csv(args.out / "exams.csv", [(s.subject_id, s.history) for s in dataset.subjects])
    achieved = sum(1 for s in dataset.subjects if s.status.value == "achieved")
    print(f"{dataset_path}: {len(dataset.subjects)} subjects, {achieved} achieved")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        dataset = dataset_from_json(args.dataset.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: dataset {args.dataset}: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out_dir or args.dataset.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        series = [
            analytics.subject_series(
                s.subject_id, s.group, [r.score for r in s.history], s.status
            )
            for s in dataset.subjects
        ]
        stats = analytics.study_stats(series, dataset.efficiencies())
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    analytics.write_curves_csv(out_dir / "curves.csv", stats.curves)
    analytics.write_accdiff_csv(out_dir / "accdiff.csv", stats.accumulated, stats.p_values)
    analytics.write_scatter_csv(out_dir / "scatter.csv", series)
    reports.save_learning_curves(stats, out_dir / "curves.png")
    reports.save_accumulated_difference(stats, out_dir / "accdiff.png")
    reports.save_talent_scatter(series, out_dir / "scatter.png")

    eff = stats.efficiency
    summary = {
        "efficiency_interactive": eff.mean_interactive,
        "efficiency_static": eff.mean_static,
        "improvement": eff.improvement,
        "t": eff.t,
        "p": eff.p,
        "subjects": len(series),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(
        f"efficiency: interactive {eff.mean_interactive:.3f} vs static {eff.mean_static:.3f} "
        f"({eff.improvement:+.1%}, p={eff.p:.3f})"
    )
    print(f"wrote curves/accdiff/scatter CSVs and figures to {out_dir}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve

    curriculum = args.curriculum or builtin_manifest_path()
    try:
        config = ServiceConfig(
            curriculum_path=Path(curriculum),
            data_dir=args.data_dir,
            exam_seed=args.seed,
            group=args.group,
        )
        serve(config, port=args.port, host=args.host)
    except (CurriculumError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "serve": _cmd_serve,
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "validate": _cmd_validate,
        "exam-gen": _cmd_exam_gen,
    }
    return handlers[args.command](args)


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()

import argparse
from pathlib import Path

from labelrepair.core.exception_handlers import EXIT_SOFTWARE
from labelrepair.core.routing import CommandRouter, argument
from labelrepair.core.settings import Settings
from labelrepair.corruption.services import read_ledger
from labelrepair.eventlog.services import read_log
from labelrepair.evaluation.services import (
    compare_table,
    format_comparison,
    format_report,
    load_reference,
    read_report_csv,
    run_experiment,
    score,
    write_repeats_csv,
    write_report_csv,
)

router = CommandRouter(tags=["evaluation"])

EXIT_MISMATCH = 1


def repeats_path(report: Path) -> Path:
    return report.with_name(report.stem + ".repeats.csv")


@router.command(
    "evaluate",
    help="score a repaired log against the corruption ledger",
    arguments=[
        argument("original", type=Path, help="log before corruption"),
        argument("repaired", type=Path, help="repaired log"),
        argument("--ledger", type=Path, required=True, help="ledger CSV"),
    ],
)
def evaluate(args: argparse.Namespace, settings: Settings) -> int:
    mapping = settings.column_mapping()
    original = read_log(args.original, mapping, settings.TIMESTAMP_FORMAT)
    repaired = read_log(args.repaired, mapping, settings.TIMESTAMP_FORMAT)
    report = score(original, repaired, read_ledger(args.ledger))
    print(f"n={report.n} m={report.m} success_rate={report.success_rate:.6f}")
    return 0


@router.command(
    "experiment",
    help="run corrupt-train-repair-score repeats for every level and variant",
    arguments=[
        argument("plan", type=Path, help="KEY=value experiment plan"),
        argument("--report", type=Path, required=True, help="report CSV"),
        argument("--reference", type=Path, help="reference CSV to compare against"),
    ],
    config_argument="plan",
)
def experiment(args: argparse.Namespace, settings: Settings) -> int:
    report = run_experiment(settings.experiment_plan())
    with open(args.report, "wb") as sink:
        write_report_csv(report, sink, include_timings=settings.INCLUDE_TIMINGS)
    with open(repeats_path(args.report), "wb") as sink:
        write_repeats_csv(report, sink)
    if settings.PLOT:
        from labelrepair.evaluation.plotting import plot_repeats

        plot_repeats(report, args.report.with_suffix(".png"))
    print(format_report(report))

    if report.errors:
        return EXIT_SOFTWARE
    if args.reference is not None:
        result = compare_table(report, load_reference(args.reference))
        print(format_comparison(result))
        if not result.passed:
            return EXIT_MISMATCH
    return 0


@router.command(
    "compare",
    help="compare a report CSV with reference means",
    arguments=[
        argument("report", type=Path, help="report CSV"),
        argument(
            "--reference",
            type=Path,
            help="reference CSV (default: published means shipped with the package)",
        ),
    ],
)
def compare(args: argparse.Namespace, settings: Settings) -> int:
    result = compare_table(read_report_csv(args.report), load_reference(args.reference))
    print(format_comparison(result))
    return 0 if result.passed else EXIT_MISMATCH

import csv
import io
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import BinaryIO

import numpy as np
from pydantic import ValidationError

from labelrepair.core.exceptions import BaseAppError, ConsistencyError, ParseError
from labelrepair.core.rng import make_rng
from labelrepair.core.timing import log_duration
from labelrepair.corruption.models import CorruptionLedger
from labelrepair.corruption.services import corrupt
from labelrepair.dataset.models import ContextConfig
from labelrepair.dataset.services import build_training_set, build_vocabulary
from labelrepair.evaluation.schemas import (
    CellComparison,
    CellResult,
    ComparisonResult,
    ExperimentPlan,
    ExperimentReport,
    ReferenceCell,
    RepeatResult,
    SuccessReport,
    Variant,
    level_label,
)
from labelrepair.eventlog.models import Event, EventLog, Trace
from labelrepair.eventlog.services import filter_short_traces, read_log
from labelrepair.repairnet.services import repair, train

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("dataset", "missing_level", "variant", "mean", "std", "n")
REPEAT_COLUMNS = (
    "dataset",
    "missing_level",
    "variant",
    "repeat",
    "seed",
    "n",
    "m",
    "success_rate",
)
REFERENCE_COLUMNS = tuple(ReferenceCell.model_fields)
REFERENCE_RESOURCE = "data/reference_rates.csv"


def _event_at(traces: dict[str, Trace], key: tuple[str, int], what: str) -> Event:
    trace_id, position = key
    trace = traces.get(trace_id)
    if trace is None or position >= len(trace):
        raise ConsistencyError(f"{what} log has no event {trace_id}:{position}")
    return trace.events[position]


def score(
    original: EventLog, repaired: EventLog, ledger: CorruptionLedger
) -> SuccessReport:
    """Fraction of removed labels that the repair restored exactly."""
    originals = original.trace_index()
    repairs = repaired.trace_index()
    m = 0
    for entry in ledger.entries:
        before = _event_at(originals, entry.key, "original")
        after = _event_at(repairs, entry.key, "repaired")
        if before.activity != entry.original_activity:
            raise ConsistencyError(
                f"original log has {before.activity!r} at {entry.trace_id}:"
                f"{entry.position}, ledger recorded {entry.original_activity!r}"
            )
        if after.activity is None:
            raise ConsistencyError(
                f"repaired log still misses the label at "
                f"{entry.trace_id}:{entry.position}"
            )
        m += after.activity == entry.original_activity
    n = ledger.count
    rate = m / n if n else 1.0
    return SuccessReport(
        n=n, m=m, success_rate=rate, per_repeat_rates=(rate,), mean=rate, std_dev=0.0
    )


def aggregate(reports: Sequence[SuccessReport]) -> SuccessReport:
    """Pool repeats: m and n are summed, mean and sample std over repeat rates."""
    rates = tuple(rate for report in reports for rate in report.per_repeat_rates)
    n = sum(report.n for report in reports)
    m = sum(report.m for report in reports)
    return SuccessReport(
        n=n,
        m=m,
        success_rate=m / n if n else 1.0,
        per_repeat_rates=rates,
        mean=float(np.mean(rates)) if rates else 1.0,
        std_dev=float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0,
    )


def random_repair(log: EventLog, activities: Sequence[str], seed: int) -> EventLog:
    """Fill every missing label with a uniformly drawn activity."""
    if not activities:
        raise ConsistencyError("random repair needs at least one activity")
    rng = make_rng(seed)
    updates = {}
    for event in log.events():
        if event.is_missing:
            choice = activities[int(rng.integers(len(activities)))]
            updates[(event.trace_id, event.position)] = choice
    return log.with_activities(updates)


class ExperimentRunner:
    def __init__(self, plan: ExperimentPlan, log: EventLog):
        self.plan = plan
        self.log = filter_short_traces(log, plan.min_trace_length)
        self.attributes = tuple(plan.mapping.attributes)

    def run_repeat(self, level: float, variant: Variant, repeat: int) -> RepeatResult:
        plan = self.plan
        seed = plan.base_seed + repeat
        corrupted, ledger = corrupt(self.log, plan.protocol, level, seed)
        vocabulary = build_vocabulary(corrupted, self.attributes)
        cfg = ContextConfig(k=plan.architecture.k)
        samples = build_training_set(corrupted, vocabulary, cfg)
        checkpoint = train(
            samples,
            vocabulary,
            variant.apply(plan.architecture),
            plan.train_config.model_copy(update={"seed": seed}),
        )
        report = score(self.log, repair(corrupted, checkpoint, cfg), ledger)
        logger.info(
            f"{plan.name} {level_label(plan.protocol, level)} {variant} "
            f"repeat {repeat}: {report.m}/{report.n} = {report.success_rate:.4f}"
        )
        return RepeatResult(
            repeat=repeat,
            seed=seed,
            n=report.n,
            m=report.m,
            success_rate=report.success_rate,
        )

    def _repeats(self, level: float, variant: Variant) -> list[RepeatResult]:
        indices = range(self.plan.repeats)
        if self.plan.threads == 1:
            return [self.run_repeat(level, variant, r) for r in indices]
        with ThreadPoolExecutor(max_workers=self.plan.threads) as pool:
            # map yields in submission order
            return list(
                pool.map(lambda r: self.run_repeat(level, variant, r), indices)
            )

    def run_cell(self, level: float, variant: Variant) -> CellResult:
        label = level_label(self.plan.protocol, level)
        cell = {"dataset": self.plan.name, "missing_level": label, "variant": variant}
        repeats: list[RepeatResult] = []
        error = None
        with log_duration(f"Cell {self.plan.name} {label} {variant}") as watch:
            try:
                repeats = self._repeats(level, variant)
            except BaseAppError as exc:
                logger.error(f"Cell {label} {variant} failed: {exc.message}")
                error = exc.message
        if error is not None:
            return CellResult(**cell, wall_time=watch.elapsed, error=error)

        summary = aggregate(
            [
                SuccessReport(
                    n=r.n,
                    m=r.m,
                    success_rate=r.success_rate,
                    per_repeat_rates=(r.success_rate,),
                    mean=r.success_rate,
                    std_dev=0.0,
                )
                for r in repeats
            ]
        )
        return CellResult(
            **cell,
            repeats=tuple(repeats),
            mean=summary.mean,
            std=summary.std_dev,
            n=repeats[0].n,
            wall_time=watch.elapsed,
        )

    def run(self) -> ExperimentReport:
        cells = [
            self.run_cell(level, variant)
            for level in self.plan.levels
            for variant in self.plan.variants
        ]
        return ExperimentReport(cells=tuple(cells))


def run_experiment(
    plan: ExperimentPlan, log: EventLog | None = None
) -> ExperimentReport:
    """Corrupt, train, repair and score `repeats` times per (level, variant)."""
    if log is None:
        log = read_log(plan.dataset, plan.mapping, plan.timestamp_format)
    return ExperimentRunner(plan, log).run()


def _compare_cell(cell: CellResult, expected: ReferenceCell) -> CellComparison:
    if cell.error is not None or cell.mean is None:
        return CellComparison(
            reference=expected,
            observed_mean=None,
            passed=False,
            reason=cell.error or "no result",
        )
    deviation = abs(cell.mean - expected.expected_mean)
    passed = deviation <= expected.tolerance
    return CellComparison(
        reference=expected,
        observed_mean=cell.mean,
        passed=passed,
        reason="" if passed else f"off by {deviation:.3f}",
    )


def compare_table(
    report: ExperimentReport, reference: Sequence[ReferenceCell]
) -> ComparisonResult:
    """Check report means against expected means; unmatched references are skipped."""
    cells = {(c.dataset, c.missing_level, c.variant): c for c in report.cells}
    comparisons = []
    skipped = 0
    for expected in reference:
        cell = cells.get((expected.dataset, expected.missing_level, expected.variant))
        if cell is None:
            skipped += 1
        else:
            comparisons.append(_compare_cell(cell, expected))
    return ComparisonResult(comparisons=tuple(comparisons), skipped=skipped)


def _csv_rows(text: str, columns: Sequence[str], what: str) -> list[dict[str, str]]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    missing = [c for c in columns if c not in (reader.fieldnames or [])]
    if missing:
        raise ParseError(f"{what} is missing columns {missing}", line=1)
    return list(reader)


def parse_reference(text: str) -> list[ReferenceCell]:
    cells = []
    rows = _csv_rows(text, REFERENCE_COLUMNS[:-1], "reference")
    for line, row in enumerate(rows, start=2):
        if not row.get("tolerance"):
            row.pop("tolerance", None)
        try:
            cells.append(ReferenceCell.model_validate(row))
        except ValidationError as exc:
            raise ParseError(f"invalid reference row: {exc}", line=line) from None
    return cells


def load_reference(path: Path | None = None) -> list[ReferenceCell]:
    """Reference means from `path`, or the published means shipped with the package."""
    if path is None:
        resource = resources.files("labelrepair.evaluation") / REFERENCE_RESOURCE
        return parse_reference(resource.read_text(encoding="utf-8"))
    return parse_reference(path.read_text(encoding="utf-8-sig"))


def _format(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def write_report_csv(
    report: ExperimentReport, sink: BinaryIO, include_timings: bool = False
) -> None:
    timing_column = ["wall_time"] if include_timings else []
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*REPORT_COLUMNS, *timing_column, "error"])
    for cell in report.cells:
        timing = [f"{cell.wall_time:.3f}"] if include_timings else []
        writer.writerow(
            [
                cell.dataset,
                cell.missing_level,
                cell.variant,
                _format(cell.mean),
                _format(cell.std),
                "" if cell.n is None else cell.n,
                *timing,
                cell.error or "",
            ]
        )
    sink.write(buffer.getvalue().encode("utf-8"))


def write_repeats_csv(report: ExperimentReport, sink: BinaryIO) -> None:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPEAT_COLUMNS)
    for cell in report.cells:
        for r in cell.repeats:
            writer.writerow(
                [
                    cell.dataset,
                    cell.missing_level,
                    cell.variant,
                    r.repeat,
                    r.seed,
                    r.n,
                    r.m,
                    _format(r.success_rate),
                ]
            )
    sink.write(buffer.getvalue().encode("utf-8"))


def read_report_csv(path: Path) -> ExperimentReport:
    """Cells (without per-repeat detail) back from a report CSV."""
    cells = []
    rows = _csv_rows(path.read_text(encoding="utf-8-sig"), REPORT_COLUMNS, "report")
    for line, row in enumerate(rows, start=2):
        try:
            cells.append(
                CellResult(
                    dataset=row["dataset"],
                    missing_level=row["missing_level"],
                    variant=row["variant"],
                    mean=row["mean"] or None,
                    std=row["std"] or None,
                    n=row["n"] or None,
                    wall_time=row.get("wall_time") or 0.0,
                    error=row.get("error") or None,
                )
            )
        except ValidationError as exc:
            raise ParseError(f"invalid report row: {exc}", line=line) from None
    return ExperimentReport(cells=tuple(cells))


def format_report(report: ExperimentReport) -> str:
    header = (
        f"{'dataset':<20} {'level':>8} {'variant':<14} "
        f"{'mean':>7} {'std':>7} {'n':>7} {'time':>9}"
    )
    lines = [header, "-" * len(header)]
    for cell in report.cells:
        if cell.error is not None:
            result = f"ERROR: {cell.error}"
        else:
            result = (
                f"{cell.mean:>7.3f} {cell.std:>7.3f} {cell.n:>7} "
                f"{cell.wall_time:>8.1f}s"
            )
        lines.append(
            f"{cell.dataset:<20} {cell.missing_level:>8} {cell.variant:<14} {result}"
        )
    return "\n".join(lines)


def format_comparison(result: ComparisonResult) -> str:
    lines = []
    for c in result.comparisons:
        ref = c.reference
        observed = "-" if c.observed_mean is None else f"{c.observed_mean:.3f}"
        status = "ok" if c.passed else f"FAIL ({c.reason})"
        lines.append(
            f"{ref.dataset} {ref.missing_level} {ref.variant}: expected "
            f"{ref.expected_mean:.3f} +/- {ref.tolerance}, observed {observed} {status}"
        )
    passed = sum(c.passed for c in result.comparisons)
    lines.append(
        f"{passed}/{len(result.comparisons)} cells within tolerance, "
        f"{result.skipped} reference cells not in report"
    )
    return "\n".join(lines)

"""End-to-end repair quality on generated and real logs.

Run with ``pytest -m slow``. The real-log cells also need the log paths in
LABELREPAIR_HELPDESK_LOG and LABELREPAIR_PRODUCTION_LOG; CSV exports are read
with the column layout below, XES files need none.
"""

import os
from pathlib import Path

import pytest

from labelrepair.corruption.models import CorruptionProtocol
from labelrepair.evaluation.schemas import ExperimentPlan, Variant
from labelrepair.evaluation.services import (
    compare_table,
    format_comparison,
    load_reference,
    run_experiment,
)
from labelrepair.eventlog.schemas import ColumnMapping
from labelrepair.repairnet.schemas import ArchitectureConfig, TrainConfig
from tests.factories import airport_log, suffix_determined_log

pytestmark = pytest.mark.slow

COMPACT = ArchitectureConfig(
    k=5,
    activity_embedding_dim=16,
    attribute_embedding_dims={"resource": 4},
    lstm_layer_sizes=(32, 16),
)
QUICK = TrainConfig(max_epochs=30, early_stop_patience=5, batch_size=64)


def _means(report) -> dict[Variant, float]:
    assert not report.errors, [cell.error for cell in report.errors]
    return {cell.variant: cell.mean for cell in report.cells}


def test_suffix_context_is_needed():
    plan = ExperimentPlan(
        dataset=Path("branching.csv"),
        levels=(0.2,),
        repeats=5,
        variants=(Variant.FULL, Variant.PREFIX_ONLY),
        architecture=COMPACT,
        train_config=QUICK,
    )
    means = _means(run_experiment(plan, suffix_determined_log(num_traces=2000)))
    assert means[Variant.FULL] >= 0.95
    assert means[Variant.FULL] - means[Variant.PREFIX_ONLY] >= 0.10


def test_airport_fixed_count():
    plan = ExperimentPlan(
        dataset=Path("airport.csv"),
        protocol=CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE,
        levels=(50,),
        repeats=3,
        architecture=COMPACT,
        train_config=QUICK,
    )
    means = _means(run_experiment(plan, airport_log(num_traces=500)))
    assert means[Variant.FULL] >= 0.90


def _real_log_plan(variable: str, name: str, level: float) -> ExperimentPlan:
    path = os.environ.get(variable)
    if not path:
        pytest.skip(f"{variable} is not set")
    return ExperimentPlan(
        dataset=Path(path),
        dataset_name=name,
        mapping=ColumnMapping(
            case="Case ID",
            activity="Activity",
            timestamp="Complete Timestamp",
            attributes={"resource": "Resource"},
        ),
        timestamp_format="%Y/%m/%d %H:%M:%S.%f",
        levels=(level,),
        repeats=10,
    )


@pytest.mark.parametrize(
    ("variable", "name", "level"),
    [
        ("LABELREPAIR_HELPDESK_LOG", "helpdesk", 0.1),
        ("LABELREPAIR_PRODUCTION_LOG", "production", 0.3),
    ],
)
def test_published_rates(variable, name, level):
    report = run_experiment(_real_log_plan(variable, name, level))
    result = compare_table(report, load_reference())
    assert result.comparisons, "no reference cell for this run"
    assert result.passed, format_comparison(result)

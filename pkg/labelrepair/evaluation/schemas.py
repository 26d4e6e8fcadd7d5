import math
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import Field, model_validator

from labelrepair.core.schemas import FrozenSchema
from labelrepair.corruption.models import CorruptionProtocol
from labelrepair.eventlog.schemas import DEFAULT_TIMESTAMP_FORMAT, ColumnMapping
from labelrepair.repairnet.schemas import ArchitectureConfig, TrainConfig


class Variant(StrEnum):
    FULL = "full"
    PREFIX_ONLY = "prefix_only"
    SUFFIX_ONLY = "suffix_only"
    NO_ATTRIBUTES = "no_attributes"

    def apply(self, architecture: ArchitectureConfig) -> ArchitectureConfig:
        """`architecture` with the branch flags this variant prescribes."""
        use_prefix, use_suffix, use_attributes = {
            Variant.FULL: (True, True, True),
            Variant.PREFIX_ONLY: (True, False, False),
            Variant.SUFFIX_ONLY: (False, True, False),
            Variant.NO_ATTRIBUTES: (True, True, False),
        }[self]
        return architecture.model_copy(
            update={
                "use_prefix": use_prefix,
                "use_suffix": use_suffix,
                "use_attributes": use_attributes,
            }
        )


class SuccessReport(FrozenSchema):
    n: int = Field(ge=0)
    m: int = Field(ge=0)
    success_rate: float = Field(ge=0.0, le=1.0)
    per_repeat_rates: tuple[float, ...] = ()
    mean: float
    std_dev: float = Field(ge=0.0)

    @model_validator(mode="after")
    def validate_counts(self):
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        expected = self.m / self.n if self.n else 1.0
        if self.success_rate != expected:
            raise ValueError("success_rate must equal m / n")
        if self.per_repeat_rates and not math.isclose(
            self.mean, float(np.mean(self.per_repeat_rates)), abs_tol=1e-12
        ):
            raise ValueError("mean does not match per_repeat_rates")
        return self


def level_label(protocol: CorruptionProtocol, level: float) -> str:
    """Report label of a missing level: "100" for counts, "10%" for proportions."""
    if protocol is CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE:
        return str(int(level))
    return f"{level * 100:g}%"


class ExperimentPlan(FrozenSchema):
    dataset: Path
    dataset_name: str | None = None
    mapping: ColumnMapping = Field(default_factory=ColumnMapping)
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT
    min_trace_length: int = Field(default=1, ge=1)
    protocol: CorruptionProtocol = CorruptionProtocol.PROPORTION
    levels: tuple[float, ...] = Field(default=(0.1, 0.2, 0.3, 0.4), min_length=1)
    repeats: int = Field(default=10, ge=1)
    variants: tuple[Variant, ...] = Field(default=(Variant.FULL,), min_length=1)
    base_seed: int = Field(default=0, ge=0)
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    train_config: TrainConfig = Field(default_factory=TrainConfig)
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def validate_levels(self):
        for level in self.levels:
            if self.protocol is CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE:
                if level < 0 or level != int(level):
                    raise ValueError(f"fixed counts must be whole numbers, got {level}")
            elif not 0.0 < level <= 1.0:
                raise ValueError(f"proportions must be in (0, 1], got {level}")
        return self

    @property
    def name(self) -> str:
        return self.dataset_name or self.dataset.stem


class RepeatResult(FrozenSchema):
    repeat: int
    seed: int
    n: int
    m: int
    success_rate: float


class CellResult(FrozenSchema):
    dataset: str
    missing_level: str
    variant: Variant
    repeats: tuple[RepeatResult, ...] = ()
    mean: float | None = None
    std: float | None = None
    n: int | None = None
    wall_time: float = 0.0
    error: str | None = None


class ExperimentReport(FrozenSchema):
    cells: tuple[CellResult, ...] = ()

    @property
    def errors(self) -> tuple[CellResult, ...]:
        return tuple(cell for cell in self.cells if cell.error is not None)


class ReferenceCell(FrozenSchema):
    dataset: str
    missing_level: str
    variant: Variant
    expected_mean: float
    tolerance: float = Field(default=0.05, ge=0.0)


class CellComparison(FrozenSchema):
    reference: ReferenceCell
    observed_mean: float | None
    passed: bool
    reason: str = ""


class ComparisonResult(FrozenSchema):
    comparisons: tuple[CellComparison, ...] = ()
    # reference cells without a matching report cell
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

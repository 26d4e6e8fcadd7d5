from enum import StrEnum

from pydantic import Field, model_validator

from labelrepair.core.rng import GENERATOR_NAME
from labelrepair.core.schemas import FrozenSchema


class CorruptionProtocol(StrEnum):
    FIXED_COUNT_ONE_PER_TRACE = "fixed_count"
    PROPORTION = "proportion"


class LedgerEntry(FrozenSchema):
    trace_id: str
    position: int = Field(ge=0)
    original_activity: str = Field(min_length=1)

    @property
    def key(self) -> tuple[str, int]:
        return self.trace_id, self.position


class CorruptionLedger(FrozenSchema):
    """Ground truth for every label removed from a log."""

    entries: tuple[LedgerEntry, ...] = ()
    seed: int = Field(ge=0)
    protocol: CorruptionProtocol

    @model_validator(mode="after")
    def validate_entries(self):
        keys = [entry.key for entry in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("ledger addresses the same event twice")
        if self.protocol is CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE:
            traces = [entry.trace_id for entry in self.entries]
            if len(set(traces)) != len(traces):
                raise ValueError("one-per-trace ledger repeats a trace")
        return self

    @property
    def count(self) -> int:
        return len(self.entries)


class LedgerProvenance(FrozenSchema):
    """JSON sidecar written next to the ledger CSV."""

    seed: int
    protocol: CorruptionProtocol
    count: int
    generator: str = GENERATOR_NAME

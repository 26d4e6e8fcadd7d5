from collections.abc import Iterable

from pydantic import Field

from labelrepair.core.schemas import FrozenSchema

DEFAULT_TIMESTAMP_FORMAT = "%d/%m/%Y %H:%M:%S"


class ColumnMapping(FrozenSchema):
    case: str = Field(default="case", min_length=1)
    activity: str = Field(default="activity", min_length=1)
    timestamp: str | None = "timestamp"
    # attribute name -> CSV column
    attributes: dict[str, str] = Field(default_factory=lambda: {"resource": "resource"})

    @classmethod
    def canonical(cls, attribute_names: Iterable[str]) -> "ColumnMapping":
        """The mapping that reads back what serialize_csv writes."""
        return cls(attributes={name: name for name in attribute_names})

    def columns(self) -> list[str]:
        columns = [self.case, self.activity]
        if self.timestamp is not None:
            columns.append(self.timestamp)
        columns.extend(self.attributes.values())
        return columns


class LogStatistics(FrozenSchema):
    traces: int
    events: int
    activities: int
    resources: int
    missing_labels: int
    mean_trace_length: float

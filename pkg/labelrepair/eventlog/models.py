from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterator, Mapping
from datetime import datetime

from pydantic import Field, field_validator, model_validator

from labelrepair.core.exceptions import ConsistencyError
from labelrepair.core.schemas import FrozenSchema


class Event(FrozenSchema):
    trace_id: str
    position: int = Field(ge=0)
    activity: str | None = None
    attributes: dict[str, str] = Field(default_factory=dict)
    timestamp: datetime | None = None

    @field_validator("activity")
    @classmethod
    def validate_activity(cls, v):
        if v is not None and v == "":
            raise ValueError("activity must be non-empty when present")
        return v

    @property
    def is_missing(self) -> bool:
        return self.activity is None


class Trace(FrozenSchema):
    trace_id: str
    events: tuple[Event, ...] = ()

    @model_validator(mode="after")
    def validate_events(self):
        for index, event in enumerate(self.events):
            if event.position != index:
                raise ValueError(
                    f"event at index {index} of trace {self.trace_id!r} "
                    f"has position {event.position}"
                )
            if event.trace_id != self.trace_id:
                raise ValueError(
                    f"event {index} belongs to {event.trace_id!r}, "
                    f"not {self.trace_id!r}"
                )
        stamps = [e.timestamp for e in self.events]
        if all(stamp is not None for stamp in stamps):
            for before, after in zip(stamps, stamps[1:], strict=False):
                if after < before:
                    raise ValueError(
                        f"trace {self.trace_id!r} is not ordered by timestamp"
                    )
        return self

    def __len__(self) -> int:
        return len(self.events)

    @property
    def activities(self) -> list[str | None]:
        return [event.activity for event in self.events]


class EventLog(FrozenSchema):
    traces: tuple[Trace, ...] = ()
    attribute_names: tuple[str, ...] = ()

    @model_validator(mode="after")
    def validate_log(self):
        seen: set[str] = set()
        declared = set(self.attribute_names)
        for trace in self.traces:
            if trace.trace_id in seen:
                raise ValueError(f"duplicate trace id {trace.trace_id!r}")
            seen.add(trace.trace_id)
            for event in trace.events:
                if set(event.attributes) != declared:
                    raise ValueError(
                        f"event {event.position} of trace {trace.trace_id!r} "
                        f"does not carry exactly {list(self.attribute_names)}"
                    )
        return self

    def events(self) -> Iterator[Event]:
        for trace in self.traces:
            yield from trace.events

    @property
    def num_events(self) -> int:
        return sum(len(trace) for trace in self.traces)

    def trace_index(self) -> dict[str, Trace]:
        return {trace.trace_id: trace for trace in self.traces}

    def with_activities(
        self, updates: Mapping[tuple[str, int], str | None]
    ) -> EventLog:
        """Return a copy where the addressed events carry the given activity."""
        by_trace: dict[str, dict[int, str | None]] = defaultdict(dict)
        for (trace_id, position), activity in updates.items():
            if activity == "":
                activity = None
            by_trace[trace_id][position] = activity

        traces = []
        for trace in self.traces:
            changes = by_trace.pop(trace.trace_id, None)
            if not changes:
                traces.append(trace)
                continue
            events = list(trace.events)
            for position, activity in changes.items():
                if not 0 <= position < len(events):
                    raise ConsistencyError(
                        f"position {position} is outside trace {trace.trace_id!r}"
                    )
                events[position] = events[position].model_copy(
                    update={"activity": activity}
                )
            traces.append(trace.model_copy(update={"events": tuple(events)}))
        if by_trace:
            unknown = sorted(by_trace)[0]
            raise ConsistencyError(f"unknown trace id {unknown!r}")
        return self.model_copy(update={"traces": tuple(traces)})

import csv
import io
from collections.abc import Sequence
from typing import BinaryIO

import numpy as np

from labelrepair.core.exceptions import ArgumentError, ConfigurationError
from labelrepair.dataset.models import (
    ContextConfig,
    ContextToken,
    EncodedBatch,
    EncodedSample,
    Reserved,
    Vocabulary,
)
from labelrepair.eventlog.models import Event, EventLog, Trace

DEFAULT_ATTRIBUTES = ("resource",)


def split_events(log: EventLog) -> tuple[list[Event], list[Event]]:
    complete: list[Event] = []
    missing: list[Event] = []
    for event in log.events():
        (missing if event.is_missing else complete).append(event)
    return complete, missing


def _token(event: Event) -> ContextToken:
    return Reserved.MISSING if event.activity is None else event.activity


def extract_context(
    trace: Trace, position: int, cfg: ContextConfig
) -> tuple[list[ContextToken], list[ContextToken]]:
    """k-prefix and k-suffix of the event at `position`.

    Both sequences end with the neighbour adjacent to the target; padding sits
    on the far side.
    """
    if not 0 <= position < len(trace):
        raise ArgumentError(
            f"position {position} outside trace {trace.trace_id!r} "
            f"of length {len(trace)}"
        )
    events = trace.events
    prefix = [
        _token(events[position - offset]) if position - offset >= 0 else Reserved.PAD
        for offset in range(cfg.k, 0, -1)
    ]
    suffix = [
        _token(events[position + offset])
        if position + offset < len(events)
        else Reserved.PAD
        for offset in range(cfg.k, 0, -1)
    ]
    return prefix, suffix


def _check_attributes(log: EventLog, attributes: Sequence[str]) -> None:
    unknown = [name for name in attributes if name not in log.attribute_names]
    if unknown:
        raise ConfigurationError(
            f"attributes {unknown} not present in log "
            f"(available: {list(log.attribute_names)})"
        )


def build_vocabulary(
    log: EventLog, attributes: Sequence[str] = DEFAULT_ATTRIBUTES
) -> Vocabulary:
    _check_attributes(log, attributes)
    activities: dict[str, None] = {}
    values: dict[str, dict[str, None]] = {name: {} for name in attributes}
    for event in log.events():
        if event.activity is not None:
            activities.setdefault(event.activity)
        for name in attributes:
            value = event.attributes[name]
            if value:
                values[name].setdefault(value)
    return Vocabulary(
        activities=tuple(activities),
        attributes={name: tuple(seen) for name, seen in values.items()},
    )


def _encode(
    trace: Trace,
    event: Event,
    vocab: Vocabulary,
    cfg: ContextConfig,
    attributes: Sequence[str],
    with_label: bool,
) -> EncodedSample:
    prefix, suffix = extract_context(trace, event.position, cfg)
    return EncodedSample(
        prefix_ids=tuple(vocab.encode_token(token) for token in prefix),
        suffix_ids=tuple(vocab.encode_token(token) for token in suffix),
        attribute_ids=tuple(
            vocab.encode_attribute(name, event.attributes[name]) for name in attributes
        ),
        label_id=vocab.encode_activity(event.activity) if with_label else None,
        origin=(event.trace_id, event.position),
    )


def _build(
    log: EventLog,
    vocab: Vocabulary,
    cfg: ContextConfig,
    attributes: Sequence[str] | None,
    missing: bool,
) -> list[EncodedSample]:
    attributes = vocab.attribute_names if attributes is None else tuple(attributes)
    _check_attributes(log, attributes)
    return [
        _encode(trace, event, vocab, cfg, attributes, with_label=not missing)
        for trace in log.traces
        for event in trace.events
        if event.is_missing == missing
    ]


def build_training_set(
    log: EventLog,
    vocab: Vocabulary,
    cfg: ContextConfig,
    attributes: Sequence[str] | None = None,
) -> list[EncodedSample]:
    return _build(log, vocab, cfg, attributes, missing=False)


def build_repair_set(
    log: EventLog,
    vocab: Vocabulary,
    cfg: ContextConfig,
    attributes: Sequence[str] | None = None,
) -> list[EncodedSample]:
    return _build(log, vocab, cfg, attributes, missing=True)


def stack_samples(samples: Sequence[EncodedSample], k: int) -> EncodedBatch:
    count = len(samples)
    width = len(samples[0].attribute_ids) if samples else 0
    labelled = bool(samples) and all(s.label_id is not None for s in samples)
    return EncodedBatch(
        prefix=np.array([s.prefix_ids for s in samples], dtype=np.int64).reshape(
            count, k
        ),
        suffix=np.array([s.suffix_ids for s in samples], dtype=np.int64).reshape(
            count, k
        ),
        attributes=np.array(
            [s.attribute_ids for s in samples], dtype=np.int64
        ).reshape(count, width),
        labels=np.array([s.label_id for s in samples], dtype=np.int64)
        if labelled
        else None,
    )


def _display(token: ContextToken) -> str:
    if token is Reserved.PAD:
        return ""
    if token is Reserved.MISSING:
        return "Missing"
    return token


def write_samples_csv(
    samples: Sequence[EncodedSample],
    vocab: Vocabulary,
    sink: BinaryIO,
    attributes: Sequence[str] | None = None,
) -> None:
    """Debug dump with one decoded row per sample."""
    attributes = vocab.attribute_names if attributes is None else tuple(attributes)
    k = len(samples[0].prefix_ids) if samples else 0
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "Event",
            *(name.capitalize() for name in attributes),
            *(f"Prefix_{i}" for i in range(1, k + 1)),
            *(f"Suffix_{i}" for i in range(1, k + 1)),
            "Label",
        ]
    )
    for sample in samples:
        trace_id, position = sample.origin
        decoded_attributes = [
            vocab.decode_attribute(name, value_id)
            for name, value_id in zip(attributes, sample.attribute_ids, strict=True)
        ]
        writer.writerow(
            [
                f"{trace_id}:{position}",
                *(v if isinstance(v, str) else "" for v in decoded_attributes),
                *(_display(vocab.decode_activity(i)) for i in sample.prefix_ids),
                *(_display(vocab.decode_activity(i)) for i in sample.suffix_ids),
                ""
                if sample.label_id is None
                else _display(vocab.decode_activity(sample.label_id)),
            ]
        )
    sink.write(buffer.getvalue().encode("utf-8"))

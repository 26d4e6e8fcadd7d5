"""Blanking activity labels under the two experimental protocols.

Fixed count removes one label from each of `count` randomly chosen traces;
proportion removes floor(fraction * labelled events) labels drawn from the
whole log. Both sample uniformly without replacement from a seeded stream.
"""

import csv
import io
import logging
import math
from decimal import Decimal
from pathlib import Path

from pydantic import ValidationError

from labelrepair.core.exceptions import (
    ArgumentError,
    CapacityError,
    ConsistencyError,
    ParseError,
)
from labelrepair.core.rng import make_rng, partial_shuffle
from labelrepair.corruption.models import (
    CorruptionLedger,
    CorruptionProtocol,
    LedgerEntry,
    LedgerProvenance,
)
from labelrepair.eventlog.models import Event, EventLog

logger = logging.getLogger(__name__)

LEDGER_COLUMNS = ("trace_id", "position", "original_activity")


def _check_seed(seed: int) -> None:
    if seed < 0:
        raise ArgumentError(f"seed must be non-negative, got {seed}")


def _apply(
    log: EventLog, chosen: list[Event], seed: int, protocol: CorruptionProtocol
) -> tuple[EventLog, CorruptionLedger]:
    order = {trace.trace_id: index for index, trace in enumerate(log.traces)}
    chosen = sorted(chosen, key=lambda e: (order[e.trace_id], e.position))
    ledger = CorruptionLedger(
        entries=tuple(
            LedgerEntry(
                trace_id=e.trace_id,
                position=e.position,
                original_activity=e.activity,
            )
            for e in chosen
        ),
        seed=seed,
        protocol=protocol,
    )
    corrupted = log.with_activities({entry.key: None for entry in ledger.entries})
    logger.info(f"Removed {ledger.count} activity labels ({protocol}, seed {seed})")
    return corrupted, ledger


def corrupt_fixed_count(
    log: EventLog, count: int, seed: int
) -> tuple[EventLog, CorruptionLedger]:
    _check_seed(seed)
    if count < 0:
        raise ArgumentError(f"count must be non-negative, got {count}")
    eligible = [
        trace for trace in log.traces if any(not e.is_missing for e in trace.events)
    ]
    if count > len(eligible):
        raise CapacityError(
            f"cannot remove {count} labels one per trace: only {len(eligible)} "
            "traces carry a label"
        )
    rng = make_rng(seed)
    chosen = []
    for trace_index in partial_shuffle(rng, len(eligible), count):
        labelled = [e for e in eligible[trace_index].events if not e.is_missing]
        chosen.append(labelled[int(rng.integers(len(labelled)))])
    return _apply(log, chosen, seed, CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE)


def proportion_count(fraction: float, labelled: int) -> int:
    # exact decimal product: 0.29 of 100 labels is 29, not 28
    return math.floor(Decimal(str(fraction)) * labelled)


def corrupt_proportion(
    log: EventLog, fraction: float, seed: int
) -> tuple[EventLog, CorruptionLedger]:
    _check_seed(seed)
    if not 0.0 < fraction <= 1.0:
        raise ArgumentError(f"fraction must be in (0, 1], got {fraction}")
    labelled = [e for e in log.events() if not e.is_missing]
    if not labelled:
        raise CapacityError("log has no labelled events to remove")
    count = proportion_count(fraction, len(labelled))
    rng = make_rng(seed)
    chosen = [labelled[i] for i in partial_shuffle(rng, len(labelled), count)]
    return _apply(log, chosen, seed, CorruptionProtocol.PROPORTION)


def corrupt(
    log: EventLog, protocol: CorruptionProtocol, level: float, seed: int
) -> tuple[EventLog, CorruptionLedger]:
    if protocol is CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE:
        if level != int(level):
            raise ArgumentError(f"fixed count must be an integer, got {level}")
        return corrupt_fixed_count(log, int(level), seed)
    return corrupt_proportion(log, level, seed)


def restore(log: EventLog, ledger: CorruptionLedger) -> EventLog:
    traces = log.trace_index()
    for entry in ledger.entries:
        trace = traces.get(entry.trace_id)
        if trace is None or entry.position >= len(trace):
            raise ConsistencyError(
                f"ledger entry {entry.trace_id}:{entry.position} is not in the log"
            )
        current = trace.events[entry.position].activity
        if current is not None:
            raise ConsistencyError(
                f"ledger entry {entry.trace_id}:{entry.position} addresses "
                f"present label {current!r}"
            )
    return log.with_activities(
        {entry.key: entry.original_activity for entry in ledger.entries}
    )


def sidecar_path(ledger_path: Path) -> Path:
    return ledger_path.with_suffix(".json")


def write_ledger(ledger: CorruptionLedger, path: Path) -> None:
    """Ledger rows to `path` (CSV) and provenance to the .json sidecar."""
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LEDGER_COLUMNS)
    for entry in ledger.entries:
        writer.writerow([entry.trace_id, entry.position, entry.original_activity])
    path.write_bytes(buffer.getvalue().encode("utf-8"))

    provenance = LedgerProvenance(
        seed=ledger.seed, protocol=ledger.protocol, count=ledger.count
    )
    sidecar_path(path).write_text(
        provenance.model_dump_json(indent=2) + "\n", encoding="utf-8"
    )


def read_ledger(path: Path) -> CorruptionLedger:
    try:
        provenance = LedgerProvenance.model_validate_json(
            sidecar_path(path).read_bytes()
        )
    except ValidationError as exc:
        raise ParseError(
            f"invalid ledger sidecar {sidecar_path(path)}: {exc}"
        ) from None

    reader = csv.reader(io.StringIO(path.read_bytes().decode("utf-8-sig"), newline=""))
    if tuple(next(reader, ())) != LEDGER_COLUMNS:
        raise ParseError(f"ledger header must be {','.join(LEDGER_COLUMNS)}", line=1)
    entries = []
    for row in reader:
        if not row:
            continue
        try:
            trace_id, position, activity = row
            entries.append(
                LedgerEntry(
                    trace_id=trace_id,
                    position=int(position),
                    original_activity=activity,
                )
            )
        except (ValueError, ValidationError):
            raise ParseError(
                f"malformed ledger row {row}", line=reader.line_num
            ) from None

    try:
        ledger = CorruptionLedger(
            entries=tuple(entries), seed=provenance.seed, protocol=provenance.protocol
        )
    except ValidationError as exc:
        raise ConsistencyError(f"invalid ledger {path}: {exc}") from None
    if ledger.count != provenance.count:
        raise ConsistencyError(
            f"sidecar records {provenance.count} entries, ledger has {ledger.count}"
        )
    return ledger

"""Reading and writing event logs.

CSV follows RFC 4180 with a header row. XES support covers the three standard
keys used by process-mining logs: ``concept:name`` (activity, and case id on
traces), ``org:resource`` and ``time:timestamp``. Other XES content is ignored.
Timestamps with a UTC offset are stored as naive UTC.
"""

import csv
import io
import logging
from collections.abc import Iterable
from datetime import UTC, datetime
from pathlib import Path
from typing import BinaryIO

from dateutil.parser import isoparse
from lxml import etree

from labelrepair.core.exceptions import ConfigurationError, ParseError
from labelrepair.eventlog.models import Event, EventLog, Trace
from labelrepair.eventlog.schemas import (
    DEFAULT_TIMESTAMP_FORMAT,
    ColumnMapping,
    LogStatistics,
)

logger = logging.getLogger(__name__)

MISSING_SENTINELS = frozenset({"", "-"})

XES_NAME_KEY = "concept:name"
XES_RESOURCE_KEY = "org:resource"
XES_TIMESTAMP_KEY = "time:timestamp"
XES_RESOURCE_ATTRIBUTE = "resource"

type _Row = tuple[datetime | None, str | None, dict[str, str]]


def _assemble(
    rows_by_case: dict[str, list[_Row]], attribute_names: Iterable[str]
) -> EventLog:
    traces = []
    for case_id, rows in rows_by_case.items():
        if all(row[0] is not None for row in rows):
            try:
                rows = sorted(rows, key=lambda row: row[0])
            except TypeError:
                raise ParseError(
                    f"trace {case_id!r} mixes timezone-aware and naive timestamps"
                ) from None
        events = tuple(
            Event(
                trace_id=case_id,
                position=position,
                activity=activity,
                attributes=attributes,
                timestamp=timestamp,
            )
            for position, (timestamp, activity, attributes) in enumerate(rows)
        )
        traces.append(Trace(trace_id=case_id, events=events))
    return EventLog(traces=tuple(traces), attribute_names=tuple(attribute_names))


def _parse_timestamp(cell: str, timestamp_format: str, line: int) -> datetime | None:
    if cell.strip() == "":
        return None
    try:
        return datetime.strptime(cell.strip(), timestamp_format)
    except ValueError:
        raise ParseError(
            f"unparseable timestamp {cell!r} (format {timestamp_format!r})",
            line=line,
            cell=cell,
        ) from None


def parse_csv(
    source: BinaryIO,
    mapping: ColumnMapping | None = None,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
) -> EventLog:
    mapping = mapping or ColumnMapping()
    try:
        text = source.read().decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text, newline=""))

    header = next(reader, None)
    if header is None:
        raise ParseError("missing header row", line=1)
    positions = {name: index for index, name in enumerate(header)}
    missing = [column for column in mapping.columns() if column not in positions]
    if missing:
        raise ConfigurationError(f"mapped columns not in header: {missing}")

    case_at = positions[mapping.case]
    activity_at = positions[mapping.activity]
    timestamp_at = positions[mapping.timestamp] if mapping.timestamp else None
    attribute_at = {
        name: positions[column] for name, column in mapping.attributes.items()
    }

    rows_by_case: dict[str, list[_Row]] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} columns, found {len(row)}", line=line
            )
        activity = row[activity_at]
        if activity.strip() in MISSING_SENTINELS:
            activity = None
        timestamp = (
            _parse_timestamp(row[timestamp_at], timestamp_format, line)
            if timestamp_at is not None
            else None
        )
        attributes = {name: row[index] for name, index in attribute_at.items()}
        rows_by_case.setdefault(row[case_at], []).append(
            (timestamp, activity, attributes)
        )

    log = _assemble(rows_by_case, mapping.attributes)
    logger.debug(f"Parsed {log.num_events} events in {len(log.traces)} traces")
    return log


def serialize_csv(
    log: EventLog,
    sink: BinaryIO,
    mapping: ColumnMapping | None = None,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
) -> None:
    """Write `log` with the column names `mapping` reads back."""
    mapping = mapping or ColumnMapping.canonical(log.attribute_names)
    with_timestamp = mapping.timestamp is not None
    header = [mapping.case, mapping.activity]
    if with_timestamp:
        header.append(mapping.timestamp)
    header.extend(mapping.attributes.get(name, name) for name in log.attribute_names)

    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for event in log.events():
        row = [event.trace_id, event.activity or ""]
        if with_timestamp:
            row.append(
                event.timestamp.strftime(timestamp_format)
                if event.timestamp is not None
                else ""
            )
        row.extend(event.attributes[name] for name in log.attribute_names)
        writer.writerow(row)
    sink.write(buffer.getvalue().encode("utf-8"))


def _local_name(element) -> str | None:
    if not isinstance(element.tag, str):
        return None
    return etree.QName(element).localname


def _read_xes_event(element, case_id: str) -> _Row:
    values: dict[str, str] = {}
    for child in element:
        key = child.get("key")
        if _local_name(child) is not None and key is not None:
            values[key] = child.get("value", "")

    activity = values.get(XES_NAME_KEY) or None
    timestamp = None
    if XES_TIMESTAMP_KEY in values:
        cell = values[XES_TIMESTAMP_KEY]
        try:
            timestamp = isoparse(cell)
        except ValueError:
            raise ParseError(
                f"unparseable timestamp {cell!r} in trace {case_id!r}",
                line=element.sourceline,
                cell=cell,
            ) from None
    if timestamp is not None and timestamp.tzinfo is not None:
        timestamp = timestamp.astimezone(UTC).replace(tzinfo=None)
    resource = values.get(XES_RESOURCE_KEY, "")
    return timestamp, activity, {XES_RESOURCE_ATTRIBUTE: resource}


def parse_xes(source: BinaryIO) -> EventLog:
    parser = etree.XMLParser(resolve_entities=False, no_network=True)
    try:
        root = etree.parse(source, parser=parser).getroot()
    except etree.XMLSyntaxError as exc:
        raise ParseError(f"malformed XES document: {exc}") from None
    if _local_name(root) != "log":
        raise ParseError(f"expected a <log> root element, found <{root.tag}>")

    rows_by_case: dict[str, list[_Row]] = {}
    for trace_element in root:
        if _local_name(trace_element) != "trace":
            continue
        case_id = None
        event_elements = []
        for child in trace_element:
            name = _local_name(child)
            if name == "event":
                event_elements.append(child)
            elif name is not None and child.get("key") == XES_NAME_KEY:
                case_id = child.get("value")
        if case_id is None:
            raise ParseError(
                "trace without case identifier", line=trace_element.sourceline
            )
        rows = rows_by_case.setdefault(case_id, [])
        rows.extend(_read_xes_event(element, case_id) for element in event_elements)

    log = _assemble(rows_by_case, [XES_RESOURCE_ATTRIBUTE])
    logger.debug(f"Parsed {log.num_events} events in {len(log.traces)} traces")
    return log


def serialize_xes(log: EventLog, sink: BinaryIO) -> None:
    root = etree.Element("log")
    root.set("xes.version", "1.0")
    for name, prefix, uri in (
        ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
        ("Organizational", "org", "http://www.xes-standard.org/org.xesext"),
        ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ):
        etree.SubElement(root, "extension", name=name, prefix=prefix, uri=uri)

    for trace in log.traces:
        trace_element = etree.SubElement(root, "trace")
        etree.SubElement(
            trace_element, "string", key=XES_NAME_KEY, value=trace.trace_id
        )
        for event in trace.events:
            event_element = etree.SubElement(trace_element, "event")
            if event.activity is not None:
                etree.SubElement(
                    event_element, "string", key=XES_NAME_KEY, value=event.activity
                )
            for name, value in event.attributes.items():
                key = XES_RESOURCE_KEY if name == XES_RESOURCE_ATTRIBUTE else name
                if value:
                    etree.SubElement(event_element, "string", key=key, value=value)
            if event.timestamp is not None:
                etree.SubElement(
                    event_element,
                    "date",
                    key=XES_TIMESTAMP_KEY,
                    value=event.timestamp.isoformat(),
                )
    sink.write(
        etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)
    )


def read_log(
    path: Path,
    mapping: ColumnMapping | None = None,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
) -> EventLog:
    with open(path, "rb") as source:
        if path.suffix.lower() == ".xes":
            return parse_xes(source)
        return parse_csv(source, mapping, timestamp_format)


def write_log(
    log: EventLog,
    path: Path,
    mapping: ColumnMapping | None = None,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
) -> None:
    with open(path, "wb") as sink:
        if path.suffix.lower() == ".xes":
            serialize_xes(log, sink)
        else:
            serialize_csv(log, sink, mapping, timestamp_format)


def describe_log(log: EventLog) -> LogStatistics:
    activities = {e.activity for e in log.events() if e.activity is not None}
    first_attribute = log.attribute_names[0] if log.attribute_names else None
    resources = (
        {e.attributes[first_attribute] for e in log.events()} - {""}
        if first_attribute is not None
        else set()
    )
    events = log.num_events
    return LogStatistics(
        traces=len(log.traces),
        events=events,
        activities=len(activities),
        resources=len(resources),
        missing_labels=sum(1 for e in log.events() if e.is_missing),
        mean_trace_length=events / len(log.traces) if log.traces else 0.0,
    )


def filter_short_traces(log: EventLog, min_length: int) -> EventLog:
    kept = tuple(trace for trace in log.traces if len(trace) >= min_length)
    if len(kept) != len(log.traces):
        logger.info(
            f"Dropped {len(log.traces) - len(kept)} traces shorter than {min_length}"
        )
    return log.model_copy(update={"traces": kept})

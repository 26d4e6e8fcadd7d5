import argparse
from pathlib import Path

from labelrepair.core.routing import CommandRouter, argument
from labelrepair.core.settings import Settings
from labelrepair.eventlog.services import describe_log, filter_short_traces, read_log

router = CommandRouter(tags=["eventlog"])


def load_input_log(path: Path, settings: Settings):
    log = read_log(path, settings.column_mapping(), settings.TIMESTAMP_FORMAT)
    return filter_short_traces(log, settings.MIN_TRACE_LENGTH)


@router.command(
    "describe",
    help="print dataset characteristics",
    arguments=[argument("input", type=Path, help="CSV or XES event log")],
)
def describe(args: argparse.Namespace, settings: Settings) -> int:
    stats = describe_log(load_input_log(args.input, settings))
    for key, value in stats.model_dump().items():
        print(f"{key}: {value:.2f}" if isinstance(value, float) else f"{key}: {value}")
    return 0

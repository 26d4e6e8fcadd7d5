import argparse
from pathlib import Path

from labelrepair.core.exceptions import ArgumentError
from labelrepair.core.routing import CommandRouter, argument
from labelrepair.core.settings import Settings
from labelrepair.corruption.services import (
    corrupt_fixed_count,
    corrupt_proportion,
    write_ledger,
)
from labelrepair.eventlog.routes import load_input_log
from labelrepair.eventlog.services import write_log

router = CommandRouter(tags=["corruption"])


@router.command(
    "corrupt",
    help="remove activity labels and record them in a ledger",
    arguments=[
        argument("input", type=Path, help="complete CSV or XES event log"),
        argument("--output", type=Path, required=True, help="corrupted log"),
        argument("--ledger", type=Path, required=True, help="ledger CSV (+ .json)"),
        argument("--count", type=int, help="labels to remove, one per trace"),
        argument("--proportion", type=float, help="fraction of labels to remove"),
    ],
)
def corrupt(args: argparse.Namespace, settings: Settings) -> int:
    if (args.count is None) == (args.proportion is None):
        raise ArgumentError("give exactly one of --count and --proportion")
    log = load_input_log(args.input, settings)
    if args.count is not None:
        corrupted, ledger = corrupt_fixed_count(log, args.count, settings.SEED)
    else:
        corrupted, ledger = corrupt_proportion(log, args.proportion, settings.SEED)
    write_log(
        corrupted, args.output, settings.column_mapping(), settings.TIMESTAMP_FORMAT
    )
    write_ledger(ledger, args.ledger)
    print(ledger.count)
    return 0

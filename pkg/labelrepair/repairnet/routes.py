import argparse
from pathlib import Path

from labelrepair.core.routing import CommandRouter, argument
from labelrepair.core.settings import Settings
from labelrepair.dataset.models import ContextConfig
from labelrepair.dataset.services import (
    build_training_set,
    build_vocabulary,
    write_samples_csv,
)
from labelrepair.eventlog.routes import load_input_log
from labelrepair.eventlog.services import write_log
from labelrepair.repairnet.services import (
    load_checkpoint,
    repair,
    save_checkpoint,
    train,
    write_history_csv,
)

router = CommandRouter(tags=["repairnet"])


def history_path(checkpoint: Path) -> Path:
    return checkpoint.with_name(checkpoint.stem + ".history.csv")


@router.command(
    "train",
    help="train a repair model on the complete events of a log",
    arguments=[
        argument("input", type=Path, help="CSV or XES event log"),
        argument("--checkpoint", type=Path, required=True, help="checkpoint JSON"),
        argument(
            "--history", type=Path, help="history CSV (default: next to checkpoint)"
        ),
        argument("--samples", type=Path, help="also write the encoded samples as CSV"),
    ],
)
def train_model(args: argparse.Namespace, settings: Settings) -> int:
    log = load_input_log(args.input, settings)
    mapping = settings.column_mapping()
    vocabulary = build_vocabulary(log, tuple(mapping.attributes))
    samples = build_training_set(log, vocabulary, settings.context_config())
    if args.samples:
        with open(args.samples, "wb") as sink:
            write_samples_csv(samples, vocabulary, sink)
    checkpoint = train(
        samples, vocabulary, settings.architecture(), settings.train_config()
    )
    save_checkpoint(checkpoint, args.checkpoint)
    with open(args.history or history_path(args.checkpoint), "wb") as sink:
        write_history_csv(checkpoint.history, sink)
    best = checkpoint.best_record
    print(
        f"best_epoch={best.epoch} val_loss={best.val_loss:.6f} "
        f"val_accuracy={best.val_accuracy:.6f}"
    )
    return 0


@router.command(
    "repair",
    help="fill missing activity labels with a trained model",
    arguments=[
        argument("input", type=Path, help="log with missing labels"),
        argument("--checkpoint", type=Path, required=True, help="checkpoint JSON"),
        argument("--output", type=Path, required=True, help="repaired log"),
    ],
)
def repair_log(args: argparse.Namespace, settings: Settings) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    log = load_input_log(args.input, settings)
    # an explicit K must agree with the checkpoint; otherwise the trained k applies
    k = settings.K if "K" in settings.model_fields_set else checkpoint.architecture.k
    missing = sum(1 for event in log.events() if event.is_missing)
    repaired = repair(log, checkpoint, ContextConfig(k=k))
    write_log(
        repaired, args.output, settings.column_mapping(), settings.TIMESTAMP_FORMAT
    )
    print(missing)
    return 0

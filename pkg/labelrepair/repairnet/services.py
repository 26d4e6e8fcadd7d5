import csv
import io
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import BinaryIO

import numpy as np
from pydantic import ValidationError

from labelrepair.core.exceptions import (
    ArgumentError,
    ConfigurationError,
    TrainingError,
)
from labelrepair.core.rng import make_rng
from labelrepair.dataset.models import (
    RESERVED_IDS,
    ContextConfig,
    EncodedBatch,
    EncodedSample,
    Vocabulary,
)
from labelrepair.dataset.services import build_repair_set, stack_samples
from labelrepair.eventlog.models import EventLog
from labelrepair.neural.optim import Nadam
from labelrepair.neural.schemas import ArrayPayload
from labelrepair.repairnet.models import RepairNet
from labelrepair.repairnet.schemas import (
    ArchitectureConfig,
    Checkpoint,
    EpochRecord,
    OptimizerConstants,
    TrainConfig,
)

logger = logging.getLogger(__name__)

MIN_TRAINING_SAMPLES = 10
MIN_CLASSES = 2


def split_train_validation(
    count: int, validation_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle range(count) and hold out its tail for validation.

    The tail holds ceil(count * validation_fraction) rows; both parts keep at
    least two and one rows respectively.
    """
    order = rng.permutation(count)
    held_out = math.ceil(round(count * validation_fraction, 9))
    split_at = count - held_out
    split_at = min(max(split_at, 2), count - 1)
    return order[:split_at], order[split_at:]


def minibatches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    """Consecutive slices of `order`; a trailing single row joins the batch before."""
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


def _accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float((probs.argmax(axis=1) == labels).mean())


class Trainer:
    def __init__(
        self,
        vocabulary: Vocabulary,
        architecture: ArchitectureConfig,
        train_config: TrainConfig,
    ):
        self.vocabulary = vocabulary
        self.architecture = architecture
        self.config = train_config
        self.rng = make_rng(train_config.seed)
        self.model = RepairNet(architecture, vocabulary, rng=self.rng)
        self.optimizer = Nadam(learning_rate=train_config.learning_rate)
        self.history: list[EpochRecord] = []

    def _train_epoch(self, data: EncodedBatch) -> tuple[float, float]:
        total_loss = 0.0
        correct = 0.0
        order = self.rng.permutation(len(data))
        for rows in minibatches(order, self.config.batch_size):
            batch = data.take(rows)
            loss, grads, probs = self.model.loss_and_gradients(
                batch, training=True, rng=self.rng
            )
            self.optimizer.step(self.model.named_parameters(), grads)
            total_loss += loss * len(rows)
            correct += _accuracy(probs, batch.labels) * len(rows)
        return total_loss / len(data), correct / len(data)

    def evaluate(self, data: EncodedBatch) -> tuple[float, float]:
        probs = self.model.predict_proba(data)
        losses = -np.log(
            np.maximum(probs[np.arange(len(data)), data.labels], 1e-12)
        )
        return float(losses.mean()), _accuracy(probs, data.labels)

    def fit(self, train_data: EncodedBatch, val_data: EncodedBatch) -> int:
        """Run epochs until early stopping; returns the restored best epoch."""
        best_loss = math.inf
        best_epoch = 0
        best_state = self.model.snapshot()
        wait = 0
        max_epochs = self.config.max_epochs
        for epoch in range(1, max_epochs + 1):
            train_loss, train_accuracy = self._train_epoch(train_data)
            val_loss, val_accuracy = self.evaluate(val_data)
            self.history.append(
                EpochRecord(
                    epoch=epoch,
                    train_loss=train_loss,
                    train_accuracy=train_accuracy,
                    val_loss=val_loss,
                    val_accuracy=val_accuracy,
                )
            )
            logger.info(
                f"epoch {epoch}/{max_epochs} loss={train_loss:.4f} "
                f"accuracy={train_accuracy:.4f} val_loss={val_loss:.4f} "
                f"val_accuracy={val_accuracy:.4f}"
            )
            if val_loss < best_loss:
                best_loss, best_epoch, wait = val_loss, epoch, 0
                best_state = self.model.snapshot()
            else:
                wait += 1
            if wait >= self.config.early_stop_patience:
                if epoch < max_epochs:
                    logger.info(f"Early stopping after epoch {epoch}")
                break
        if best_epoch == 0:
            raise TrainingError("no epoch reached a finite validation loss")
        self.model.load_state(best_state)
        return best_epoch

    def checkpoint(self, best_epoch: int) -> Checkpoint:
        return Checkpoint(
            architecture=self.architecture,
            train_config=self.config,
            vocabulary=self.vocabulary,
            optimizer=OptimizerConstants(**self.optimizer.constants()),
            params={
                name: ArrayPayload.from_array(array)
                for name, array in self.model.state_dict().items()
            },
            history=tuple(self.history),
            best_epoch=best_epoch,
        )


def train(
    samples: Sequence[EncodedSample],
    vocabulary: Vocabulary,
    architecture: ArchitectureConfig | None = None,
    train_config: TrainConfig | None = None,
) -> Checkpoint:
    architecture = architecture or ArchitectureConfig()
    train_config = train_config or TrainConfig()
    if any(sample.label_id is None for sample in samples):
        raise ArgumentError("training samples must all carry a label")
    if len(samples) < MIN_TRAINING_SAMPLES:
        raise TrainingError(
            f"need at least {MIN_TRAINING_SAMPLES} labelled samples, got {len(samples)}"
        )
    classes = {sample.label_id for sample in samples}
    if len(classes) < MIN_CLASSES:
        raise TrainingError(
            f"need at least {MIN_CLASSES} distinct labels, got {len(classes)}"
        )
    if len(samples[0].prefix_ids) != architecture.k:
        raise ConfigurationError(
            f"samples were built with k={len(samples[0].prefix_ids)}, "
            f"architecture expects k={architecture.k}"
        )

    data = stack_samples(samples, architecture.k)
    trainer = Trainer(vocabulary, architecture, train_config)
    train_rows, val_rows = split_train_validation(
        len(data), train_config.validation_fraction, trainer.rng
    )
    logger.info(
        f"Training on {len(train_rows)} samples, validating on {len(val_rows)}, "
        f"{len(classes)} classes"
    )
    best_epoch = trainer.fit(data.take(train_rows), data.take(val_rows))
    checkpoint = trainer.checkpoint(best_epoch)
    best = checkpoint.best_record
    logger.info(
        f"Best epoch {best_epoch}: val_loss={best.val_loss:.4f} "
        f"val_accuracy={best.val_accuracy:.4f}"
    )
    return checkpoint


def predict_labels(model: RepairNet, batch: EncodedBatch) -> np.ndarray:
    """Most probable non-reserved activity id per row; ties go to the lowest id."""
    probs = model.predict_proba(batch)
    return probs[:, RESERVED_IDS:].argmax(axis=1) + RESERVED_IDS


def repair(
    log: EventLog, checkpoint: Checkpoint, cfg: ContextConfig | None = None
) -> EventLog:
    """Fill every missing activity in one pass over the corrupted contexts."""
    architecture = checkpoint.architecture
    cfg = cfg or ContextConfig(k=architecture.k)
    if cfg.k != architecture.k:
        raise ConfigurationError(
            f"context length {cfg.k} differs from the trained k={architecture.k}"
        )
    vocabulary = checkpoint.vocabulary
    samples = build_repair_set(log, vocabulary, cfg)
    if not samples:
        logger.info("No missing labels to repair")
        return log

    model = RepairNet.from_checkpoint(checkpoint)
    predicted = predict_labels(model, stack_samples(samples, cfg.k))
    updates = {
        sample.origin: vocabulary.decode_activity(int(label_id))
        for sample, label_id in zip(samples, predicted, strict=True)
    }
    logger.info(f"Repaired {len(updates)} missing labels")
    return log.with_activities(updates)


def save_checkpoint(checkpoint: Checkpoint, path: Path) -> None:
    path.write_text(checkpoint.model_dump_json(), encoding="utf-8")


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        checkpoint = Checkpoint.model_validate_json(path.read_bytes())
    except ValidationError as exc:
        raise ConfigurationError(f"invalid checkpoint {path}: {exc}") from None
    # rebuilding the network validates every stored shape
    RepairNet.from_checkpoint(checkpoint)
    return checkpoint


def write_history_csv(history: Sequence[EpochRecord], sink: BinaryIO) -> None:
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\n")
    columns = list(EpochRecord.model_fields)
    writer.writerow(columns)
    for record in history:
        writer.writerow([getattr(record, column) for column in columns])
    sink.write(buffer.getvalue().encode("utf-8"))

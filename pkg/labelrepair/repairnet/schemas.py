from pydantic import Field, PositiveInt, model_validator

from labelrepair.core.schemas import FrozenSchema
from labelrepair.dataset.models import Vocabulary
from labelrepair.neural.schemas import ArrayPayload

CHECKPOINT_FORMAT_VERSION = 1


class ArchitectureConfig(FrozenSchema):
    k: int = Field(default=5, ge=1)
    activity_embedding_dim: PositiveInt = 100
    attribute_embedding_dims: dict[str, PositiveInt] = Field(
        default_factory=lambda: {"resource": 16}
    )
    # used for attributes without an explicit dimension
    default_attribute_embedding_dim: PositiveInt = 16
    lstm_layer_sizes: tuple[PositiveInt, ...] = Field(default=(32, 16), min_length=1)
    dropout_rate: float = Field(default=0.2, ge=0.0, lt=1.0)
    use_prefix: bool = True
    use_suffix: bool = True
    use_attributes: bool = True

    @model_validator(mode="after")
    def validate_branches(self):
        if not (self.use_prefix or self.use_suffix):
            raise ValueError("at least one of use_prefix and use_suffix must be set")
        return self

    def attribute_dim(self, name: str) -> int:
        return self.attribute_embedding_dims.get(
            name, self.default_attribute_embedding_dim
        )


class TrainConfig(FrozenSchema):
    max_epochs: int = Field(default=100, ge=1)
    early_stop_patience: int = Field(default=10, ge=0)
    batch_size: int = Field(default=32, ge=2)
    learning_rate: float = Field(default=0.002, gt=0.0)
    validation_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)


class EpochRecord(FrozenSchema):
    epoch: int = Field(ge=1)
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


class OptimizerConstants(FrozenSchema):
    name: str = "nadam"
    learning_rate: float
    beta_1: float
    beta_2: float
    epsilon: float


class Checkpoint(FrozenSchema):
    format_version: int = CHECKPOINT_FORMAT_VERSION
    architecture: ArchitectureConfig
    train_config: TrainConfig
    vocabulary: Vocabulary
    optimizer: OptimizerConstants
    params: dict[str, ArrayPayload]
    history: tuple[EpochRecord, ...] = ()
    best_epoch: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_version(self):
        if self.format_version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint format version {self.format_version}"
            )
        return self

    @property
    def best_record(self) -> EpochRecord | None:
        for record in self.history:
            if record.epoch == self.best_epoch:
                return record
        return None

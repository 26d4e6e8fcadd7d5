"""Run configuration.

Values come from keyword arguments (built from command-line flags) and an
optional flat KEY=value file; flags win. The process environment is not read.
"""

from pathlib import Path
from typing import Annotated, Any

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import (
    BaseSettings,
    NoDecode,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from labelrepair.core.exceptions import ConfigurationError
from labelrepair.corruption.models import CorruptionProtocol
from labelrepair.dataset.models import ContextConfig
from labelrepair.evaluation.schemas import ExperimentPlan, Variant
from labelrepair.eventlog.schemas import DEFAULT_TIMESTAMP_FORMAT, ColumnMapping
from labelrepair.repairnet.schemas import ArchitectureConfig, TrainConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=None,
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="forbid",
    )

    APP_NAME: str = Field(default="labelrepair")
    APP_VERSION: str = Field(default="0.1.0")
    LOG_LEVEL: str = Field(default="INFO")

    # input columns; ATTRIBUTES items are name:column (or just name)
    CASE_COLUMN: str = Field(default="case")
    ACTIVITY_COLUMN: str = Field(default="activity")
    TIMESTAMP_COLUMN: str | None = Field(default="timestamp")
    TIMESTAMP_FORMAT: str = Field(default=DEFAULT_TIMESTAMP_FORMAT)
    ATTRIBUTES: Annotated[list[str], NoDecode] = Field(default=["resource"])
    MIN_TRACE_LENGTH: int = Field(default=1, ge=1)

    K: int = Field(default=5, ge=1)
    ACTIVITY_EMBEDDING_DIM: int = Field(default=100, gt=0)
    ATTRIBUTE_EMBEDDING_DIM: int = Field(default=16, gt=0)
    LSTM_LAYER_SIZES: Annotated[list[int], NoDecode] = Field(default=[32, 16])
    DROPOUT_RATE: float = Field(default=0.2)
    USE_PREFIX: bool = Field(default=True)
    USE_SUFFIX: bool = Field(default=True)
    USE_ATTRIBUTES: bool = Field(default=True)

    MAX_EPOCHS: int = Field(default=100)
    EARLY_STOP_PATIENCE: int = Field(default=10)
    BATCH_SIZE: int = Field(default=32, ge=2)
    LEARNING_RATE: float = Field(default=0.002)
    VALIDATION_FRACTION: float = Field(default=0.2)
    SEED: int = Field(default=0, ge=0)

    DATASET: Path | None = Field(default=None)
    DATASET_NAME: str | None = Field(default=None)
    PROTOCOL: CorruptionProtocol = Field(default=CorruptionProtocol.PROPORTION)
    LEVELS: Annotated[list[float], NoDecode] = Field(default=[0.1, 0.2, 0.3, 0.4])
    REPEATS: int = Field(default=10, ge=1)
    VARIANTS: Annotated[list[Variant], NoDecode] = Field(default=[Variant.FULL])
    THREADS: int = Field(default=1, ge=1)
    INCLUDE_TIMINGS: bool = Field(default=False)
    PLOT: bool = Field(default=False)

    @field_validator(
        "ATTRIBUTES", "LSTM_LAYER_SIZES", "LEVELS", "VARIANTS", mode="before"
    )
    @classmethod
    def split_list(cls, v: Any):
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("TIMESTAMP_COLUMN", "DATASET", "DATASET_NAME", mode="before")
    @classmethod
    def blank_as_none(cls, v: Any):
        if isinstance(v, str) and v.strip() == "":
            return None
        return v

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, dotenv_settings

    def column_mapping(self) -> ColumnMapping:
        attributes = {}
        for item in self.ATTRIBUTES:
            name, _, column = item.partition(":")
            attributes[name.strip()] = column.strip() or name.strip()
        return _build(
            ColumnMapping,
            case=self.CASE_COLUMN,
            activity=self.ACTIVITY_COLUMN,
            timestamp=self.TIMESTAMP_COLUMN,
            attributes=attributes,
        )

    def context_config(self) -> ContextConfig:
        return _build(ContextConfig, k=self.K)

    def architecture(self) -> ArchitectureConfig:
        return _build(
            ArchitectureConfig,
            k=self.K,
            activity_embedding_dim=self.ACTIVITY_EMBEDDING_DIM,
            attribute_embedding_dims={},
            default_attribute_embedding_dim=self.ATTRIBUTE_EMBEDDING_DIM,
            lstm_layer_sizes=tuple(self.LSTM_LAYER_SIZES),
            dropout_rate=self.DROPOUT_RATE,
            use_prefix=self.USE_PREFIX,
            use_suffix=self.USE_SUFFIX,
            use_attributes=self.USE_ATTRIBUTES,
        )

    def train_config(self) -> TrainConfig:
        return _build(
            TrainConfig,
            max_epochs=self.MAX_EPOCHS,
            early_stop_patience=self.EARLY_STOP_PATIENCE,
            batch_size=self.BATCH_SIZE,
            learning_rate=self.LEARNING_RATE,
            validation_fraction=self.VALIDATION_FRACTION,
            seed=self.SEED,
        )

    def experiment_plan(self) -> ExperimentPlan:
        if self.DATASET is None:
            raise ConfigurationError("DATASET is required for experiments")
        return _build(
            ExperimentPlan,
            dataset=self.DATASET,
            dataset_name=self.DATASET_NAME,
            mapping=self.column_mapping(),
            timestamp_format=self.TIMESTAMP_FORMAT,
            min_trace_length=self.MIN_TRACE_LENGTH,
            protocol=self.PROTOCOL,
            levels=tuple(self.LEVELS),
            repeats=self.REPEATS,
            variants=tuple(self.VARIANTS),
            base_seed=self.SEED,
            architecture=self.architecture(),
            train_config=self.train_config(),
            threads=self.THREADS,
        )

    def resolved(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def _build[T](model: type[T], **values) -> T:
    try:
        return model(**values)
    except ValidationError as exc:
        raise ConfigurationError(_describe(exc)) from None


def _describe(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in error['loc']) or 'value'}: {error['msg']}"
        for error in exc.errors()
    )


def load_settings(config: Path | None = None, **overrides: Any) -> Settings:
    """Settings from `config` (KEY=value lines) with `overrides` applied on top."""
    if config is not None and not config.is_file():
        raise ConfigurationError(f"configuration file {config} does not exist")
    try:
        return Settings(_env_file=config, **overrides)
    except ValidationError as exc:
        raise ConfigurationError(_describe(exc)) from None

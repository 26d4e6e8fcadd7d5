import io

import numpy as np
import pytest

from labelrepair.core.rng import make_rng
from labelrepair.dataset.models import Vocabulary
from labelrepair.eventlog.services import parse_csv
from labelrepair.repairnet.models import RepairNet
from labelrepair.repairnet.schemas import ArchitectureConfig, TrainConfig
from tests.factories import AIRPORT_MAPPING, airport_csv


@pytest.fixture
def incomplete_log():
    """The three-trace airport log with two blanked labels."""
    return parse_csv(io.BytesIO(airport_csv()), AIRPORT_MAPPING)


@pytest.fixture
def complete_log():
    return parse_csv(io.BytesIO(airport_csv(complete=True)), AIRPORT_MAPPING)


@pytest.fixture
def airport_file(tmp_path):
    path = tmp_path / "airport.csv"
    path.write_bytes(airport_csv(complete=True))
    return path


@pytest.fixture
def small_architecture():
    return ArchitectureConfig(
        k=3,
        activity_embedding_dim=4,
        attribute_embedding_dims={"resource": 3},
        lstm_layer_sizes=(5, 3),
        dropout_rate=0.2,
    )


@pytest.fixture
def quick_training():
    return TrainConfig(max_epochs=3, early_stop_patience=2, batch_size=8, seed=1)


@pytest.fixture
def toy_vocabulary():
    return Vocabulary(
        activities=("a", "b", "c", "d"),
        attributes={"resource": ("x", "y")},
    )


@pytest.fixture
def float64_model(small_architecture, toy_vocabulary):
    model = RepairNet(
        small_architecture, toy_vocabulary, rng=make_rng(3), dtype=np.float64
    )
    rng = make_rng(4)
    for array in model.named_parameters().values():
        array[...] = rng.normal(scale=0.5, size=array.shape)
    return model

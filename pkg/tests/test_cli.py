import logging
import re
from pathlib import Path

import pytest

from labelrepair.app import main
from labelrepair.core.exception_handlers import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_SOFTWARE,
    EXIT_USAGE,
)
from labelrepair.core.exceptions import ConfigurationError
from labelrepair.core.routing import settings_flag
from labelrepair.core.settings import load_settings
from labelrepair.corruption.models import CorruptionProtocol
from labelrepair.evaluation.routes import EXIT_MISMATCH
from labelrepair.evaluation.schemas import Variant
from labelrepair.eventlog.services import write_log
from tests.factories import AIRPORT_CONFIG, AIRPORT_MAPPING, airport_log

SMALL_MODEL = """\
K=2
ACTIVITY_EMBEDDING_DIM=4
ATTRIBUTE_EMBEDDING_DIM=3
LSTM_LAYER_SIZES=5,3
MAX_EPOCHS=2
BATCH_SIZE=8
"""


@pytest.fixture
def config_file(tmp_path) -> Path:
    path = tmp_path / "airport.env"
    path.write_text(AIRPORT_CONFIG + SMALL_MODEL)
    return path


@pytest.fixture
def passenger_file(tmp_path) -> Path:
    path = tmp_path / "passengers.csv"
    write_log(airport_log(num_traces=20, seed=1), path, AIRPORT_MAPPING)
    return path


def _plan(tmp_path, dataset, **extra) -> Path:
    lines = [
        AIRPORT_CONFIG + SMALL_MODEL,
        f"DATASET={dataset}",
        "DATASET_NAME=airport",
        "LEVELS=0.1",
        "REPEATS=2",
    ]
    lines += [f"{key}={value}" for key, value in extra.items()]
    path = tmp_path / "plan.env"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestSettings:
    def test_defaults(self):
        settings = load_settings()
        assert settings.K == 5
        assert settings.LSTM_LAYER_SIZES == [32, 16]
        assert settings.PROTOCOL is CorruptionProtocol.PROPORTION
        assert settings.VARIANTS == [Variant.FULL]
        assert settings.column_mapping().attributes == {"resource": "resource"}

    def test_file_and_overrides(self, config_file):
        settings = load_settings(config_file, K="4")
        assert settings.K == 4
        assert settings.LSTM_LAYER_SIZES == [5, 3]
        assert settings.column_mapping() == AIRPORT_MAPPING
        assert settings.architecture().default_attribute_embedding_dim == 3

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.env"
        path.write_text("K=3\nBOGUS=1\n")
        with pytest.raises(ConfigurationError):
            load_settings(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_settings(tmp_path / "absent.env")

    def test_blank_timestamp_column(self):
        settings = load_settings(TIMESTAMP_COLUMN="")
        assert settings.column_mapping().timestamp is None

    def test_attribute_list(self):
        settings = load_settings(ATTRIBUTES="resource:Resource, cost")
        assert settings.column_mapping().attributes == {
            "resource": "Resource",
            "cost": "cost",
        }

    def test_lists_from_strings(self):
        settings = load_settings(LEVELS="0.1,0.2", VARIANTS="full,prefix_only")
        assert settings.LEVELS == [0.1, 0.2]
        assert settings.VARIANTS == [Variant.FULL, Variant.PREFIX_ONLY]

    def test_experiment_needs_dataset(self):
        with pytest.raises(ConfigurationError):
            load_settings().experiment_plan()

    def test_invalid_model_values(self):
        with pytest.raises(ConfigurationError):
            load_settings(DROPOUT_RATE=1.5).architecture()
        with pytest.raises(ConfigurationError):
            load_settings(VALIDATION_FRACTION=0).train_config()

    def test_single_row_batches(self):
        with pytest.raises(ConfigurationError):
            load_settings(BATCH_SIZE=1)

    def test_flag_names(self):
        assert settings_flag("BATCH_SIZE") == "--batch-size"
        assert settings_flag("K") == "--k"


class TestPipeline:
    def test_corrupt_train_repair_evaluate(
        self, tmp_path, airport_file, config_file, capsys
    ):
        config = ["--config", str(config_file)]
        corrupted = tmp_path / "corrupted.csv"
        ledger = tmp_path / "ledger.csv"
        checkpoint = tmp_path / "model.json"
        repaired = tmp_path / "repaired.csv"

        code = main(
            ["corrupt", str(airport_file), "--output", str(corrupted)]
            + ["--ledger", str(ledger), "--count", "2", "--seed", "7", *config]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == "2"
        assert ledger.with_suffix(".json").is_file()

        code = main(
            ["train", str(corrupted), "--checkpoint", str(checkpoint), *config]
        )
        assert code == 0
        assert capsys.readouterr().out.startswith("best_epoch=")
        assert (tmp_path / "model.history.csv").is_file()

        code = main(
            ["repair", str(corrupted), "--checkpoint", str(checkpoint)]
            + ["--output", str(repaired), *config]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == "2"

        code = main(
            ["evaluate", str(airport_file), str(repaired), "--ledger", str(ledger)]
            + config
        )
        assert code == 0
        match = re.fullmatch(
            r"n=2 m=(\d) success_rate=([0-9.]+)", capsys.readouterr().out.strip()
        )
        assert match is not None
        assert 0.0 <= float(match.group(2)) <= 1.0

        code = main(
            ["repair", str(corrupted), "--checkpoint", str(checkpoint)]
            + ["--output", str(repaired), "--k", "3", *config]
        )
        assert code == EXIT_CONFIG

    def test_train_writes_samples(self, tmp_path, airport_file, config_file):
        samples = tmp_path / "samples.csv"
        code = main(
            ["train", str(airport_file), "--checkpoint", str(tmp_path / "m.json")]
            + ["--samples", str(samples), "--config", str(config_file)]
        )
        assert code == 0
        lines = samples.read_text().splitlines()
        assert len(lines) == 16
        assert lines[0] == "Event,Resource,Prefix_1,Prefix_2,Suffix_1,Suffix_2,Label"
        assert lines[1] == "1:0,Tom,,,Security Check,Check in,Arrive at Airport"

    def test_proportion(self, tmp_path, passenger_file, config_file, capsys):
        code = main(
            ["corrupt", str(passenger_file), "--proportion", "0.2"]
            + ["--output", str(tmp_path / "out.csv")]
            + ["--ledger", str(tmp_path / "ledger.csv")]
            + ["--config", str(config_file)]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == "20"

    def test_describe(self, airport_file, config_file, capsys):
        assert main(["describe", str(airport_file), "--config", str(config_file)]) == 0
        out = capsys.readouterr().out
        assert "traces: 3" in out
        assert "activities: 8" in out

    def test_resolved_configuration_is_logged(
        self, airport_file, config_file, caplog
    ):
        caplog.set_level(logging.INFO)
        main(
            ["describe", str(airport_file), "--config", str(config_file)]
            + ["--seed", "11"]
        )
        assert "config SEED=11" in caplog.messages
        assert "config K=2" in caplog.messages


class TestExitCodes:
    def test_missing_input(self, tmp_path):
        code = main(
            ["corrupt", str(tmp_path / "absent.csv"), "--count", "1"]
            + ["--output", str(tmp_path / "o.csv"), "--ledger", str(tmp_path / "l.csv")]
        )
        assert code == EXIT_DATA

    def test_unknown_configuration_key(self, tmp_path, airport_file):
        path = tmp_path / "bad.env"
        path.write_text("NOT_A_SETTING=1\n")
        assert main(["describe", str(airport_file), "--config", str(path)]) == (
            EXIT_CONFIG
        )

    def test_count_and_proportion_together(self, tmp_path, airport_file):
        code = main(
            ["corrupt", str(airport_file), "--count", "1", "--proportion", "0.1"]
            + ["--output", str(tmp_path / "o.csv"), "--ledger", str(tmp_path / "l.csv")]
        )
        assert code == EXIT_USAGE

    def test_capacity(self, tmp_path, airport_file, config_file):
        code = main(
            ["corrupt", str(airport_file), "--count", "4"]
            + ["--output", str(tmp_path / "o.csv"), "--ledger", str(tmp_path / "l.csv")]
            + ["--config", str(config_file)]
        )
        assert code == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["fix-everything"]) == EXIT_USAGE

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "labelrepair" in capsys.readouterr().out

    def test_malformed_log(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("case,activity,timestamp,resource\n1,a,not a date,x\n")
        assert main(["describe", str(path)]) == EXIT_DATA


class TestExperimentCommand:
    def test_identical_reports(self, tmp_path, passenger_file, capsys):
        plan = _plan(tmp_path, passenger_file)
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        assert main(["experiment", str(plan), "--report", str(first)]) == 0
        assert main(["experiment", str(plan), "--report", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert (tmp_path / "first.repeats.csv").read_bytes() == (
            tmp_path / "second.repeats.csv"
        ).read_bytes()
        assert first.read_text().startswith(
            "dataset,missing_level,variant,mean,std,n,error\nairport,10%,full,"
        )
        assert "airport" in capsys.readouterr().out

    def test_failing_cell(self, tmp_path, passenger_file):
        plan = _plan(tmp_path, passenger_file, PROTOCOL="fixed_count", LEVELS=1000)
        report = tmp_path / "report.csv"
        assert main(["experiment", str(plan), "--report", str(report)]) == (
            EXIT_SOFTWARE
        )
        assert "1000" in report.read_text()

    def test_plot_and_timings(self, tmp_path, passenger_file):
        plan = _plan(
            tmp_path, passenger_file, REPEATS=1, PLOT="true", INCLUDE_TIMINGS="true"
        )
        report = tmp_path / "report.csv"
        assert main(["experiment", str(plan), "--report", str(report)]) == 0
        assert "wall_time" in report.read_text().splitlines()[0]
        assert report.with_suffix(".png").is_file()


class TestCompareCommand:
    REPORT = (
        "dataset,missing_level,variant,mean,std,n,error\n"
        "airport,10%,full,0.500000,0.010000,20,\n"
    )

    def test_mismatch(self, tmp_path, capsys):
        report = tmp_path / "report.csv"
        report.write_text(self.REPORT)
        reference = tmp_path / "reference.csv"
        reference.write_text(
            "dataset,missing_level,variant,expected_mean,tolerance\n"
            "airport,10%,full,0.95,0.05\n"
        )
        code = main(["compare", str(report), "--reference", str(reference)])
        assert code == EXIT_MISMATCH
        assert "FAIL" in capsys.readouterr().out

    def test_packaged_reference_has_no_matching_cells(self, tmp_path, capsys):
        report = tmp_path / "report.csv"
        report.write_text(self.REPORT)
        assert main(["compare", str(report)]) == 0
        assert "0/0 cells within tolerance" in capsys.readouterr().out

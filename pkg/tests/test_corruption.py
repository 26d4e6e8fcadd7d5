import json

import pytest
from pydantic import ValidationError

from labelrepair.core.exceptions import (
    ArgumentError,
    CapacityError,
    ConsistencyError,
    ParseError,
)
from labelrepair.core.rng import GENERATOR_NAME, make_rng, partial_shuffle
from labelrepair.corruption.models import (
    CorruptionLedger,
    CorruptionProtocol,
    LedgerEntry,
)
from labelrepair.corruption.services import (
    corrupt,
    corrupt_fixed_count,
    corrupt_proportion,
    proportion_count,
    read_ledger,
    restore,
    sidecar_path,
    write_ledger,
)
from tests.factories import airport_log, make_log, random_log


def _labelled(log) -> set[tuple[str, int]]:
    return {(e.trace_id, e.position) for e in log.events() if not e.is_missing}


class TestPartialShuffle:
    def test_draws_distinct_indices(self):
        picked = partial_shuffle(make_rng(3), 50, 20)
        assert len(picked) == 20
        assert len(set(picked)) == 20
        assert all(0 <= index < 50 for index in picked)

    def test_same_seed_same_draw(self):
        assert partial_shuffle(make_rng(9), 30, 10) == partial_shuffle(
            make_rng(9), 30, 10
        )


class TestFixedCount:
    def test_one_label_per_trace(self):
        log = airport_log(num_traces=150, seed=2)
        corrupted, ledger = corrupt_fixed_count(log, 100, seed=0)
        assert ledger.count == 100
        assert len({entry.trace_id for entry in ledger.entries}) == 100
        missing = [e for e in corrupted.events() if e.is_missing]
        assert len(missing) == 100

    def test_other_events_untouched(self, complete_log):
        corrupted, ledger = corrupt_fixed_count(complete_log, 2, seed=4)
        removed = {entry.key for entry in ledger.entries}
        for before, after in zip(
            complete_log.events(), corrupted.events(), strict=True
        ):
            if (before.trace_id, before.position) in removed:
                assert after.is_missing
            else:
                assert after == before

    def test_zero_count(self, complete_log):
        corrupted, ledger = corrupt_fixed_count(complete_log, 0, seed=1)
        assert corrupted == complete_log
        assert ledger.entries == ()

    def test_deterministic(self, complete_log):
        first = corrupt_fixed_count(complete_log, 3, seed=42)
        second = corrupt_fixed_count(complete_log, 3, seed=42)
        assert first == second

    def test_capacity(self, complete_log):
        with pytest.raises(CapacityError):
            corrupt_fixed_count(complete_log, 4, seed=0)

    def test_fully_blank_traces_are_not_eligible(self):
        log = make_log({"a": [None, None], "b": ["x", "y"]})
        with pytest.raises(CapacityError):
            corrupt_fixed_count(log, 2, seed=0)
        _, ledger = corrupt_fixed_count(log, 1, seed=0)
        assert ledger.entries[0].trace_id == "b"

    def test_negative_seed(self, complete_log):
        with pytest.raises(ArgumentError):
            corrupt_fixed_count(complete_log, 1, seed=-1)


class TestProportion:
    def test_count_is_floored(self):
        assert proportion_count(0.30, 15214) == 4564
        assert proportion_count(0.29, 100) == 29
        assert proportion_count(0.5, 1) == 0

    def test_twenty_percent_of_hundred(self):
        log = airport_log(num_traces=20, seed=0)
        _, ledger = corrupt_proportion(log, 0.2, seed=7)
        assert log.num_events == 100
        assert ledger.count == 20
        assert ledger.protocol is CorruptionProtocol.PROPORTION

    def test_floor_to_zero_leaves_log_unchanged(self):
        log = make_log({"only": ["x"]})
        corrupted, ledger = corrupt_proportion(log, 0.5, seed=0)
        assert corrupted == log
        assert ledger.count == 0

    def test_removed_and_remaining_partition_labels(self):
        log = random_log(seed=3, num_traces=30)
        corrupted, ledger = corrupt_proportion(log, 0.4, seed=5)
        removed = {entry.key for entry in ledger.entries}
        remaining = _labelled(corrupted)
        assert removed.isdisjoint(remaining)
        assert removed | remaining == _labelled(log)

    def test_several_labels_per_trace_allowed(self):
        log = make_log({"t": ["a", "b", "c", "d"]})
        _, ledger = corrupt_proportion(log, 1.0, seed=0)
        assert ledger.count == 4

    @pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
    def test_fraction_out_of_range(self, complete_log, fraction):
        with pytest.raises(ArgumentError):
            corrupt_proportion(complete_log, fraction, seed=0)

    def test_nothing_to_remove(self):
        log = make_log({"t": [None, None]})
        with pytest.raises(CapacityError):
            corrupt_proportion(log, 0.5, seed=0)


class TestDispatch:
    def test_fixed_count_level_must_be_whole(self, complete_log):
        with pytest.raises(ArgumentError):
            corrupt(complete_log, CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE, 1.5, 0)

    def test_routes_to_protocol(self, complete_log):
        _, ledger = corrupt(
            complete_log, CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE, 2.0, 0
        )
        assert ledger.protocol is CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE
        assert ledger.count == 2


class TestRestore:
    @pytest.mark.parametrize("seed", range(5))
    def test_restore_inverts_proportion(self, seed):
        log = random_log(seed=seed, num_traces=12)
        corrupted, ledger = corrupt_proportion(log, 0.2, seed)
        assert restore(corrupted, ledger) == log

    @pytest.mark.parametrize("seed", range(5))
    def test_restore_inverts_fixed_count(self, seed):
        log = airport_log(num_traces=10, seed=seed)
        corrupted, ledger = corrupt_fixed_count(log, 6, seed)
        assert restore(corrupted, ledger) == log

    def test_empty_ledger_is_identity(self, incomplete_log):
        ledger = CorruptionLedger(seed=0, protocol=CorruptionProtocol.PROPORTION)
        assert restore(incomplete_log, ledger) == incomplete_log

    def test_stale_position(self, complete_log):
        ledger = CorruptionLedger(
            entries=(LedgerEntry(trace_id="1", position=0, original_activity="x"),),
            seed=0,
            protocol=CorruptionProtocol.PROPORTION,
        )
        with pytest.raises(ConsistencyError):
            restore(complete_log, ledger)

    def test_unknown_trace(self, complete_log):
        ledger = CorruptionLedger(
            entries=(LedgerEntry(trace_id="9", position=0, original_activity="x"),),
            seed=0,
            protocol=CorruptionProtocol.PROPORTION,
        )
        with pytest.raises(ConsistencyError):
            restore(complete_log, ledger)


class TestLedger:
    def test_duplicate_address(self):
        entry = LedgerEntry(trace_id="1", position=0, original_activity="a")
        with pytest.raises(ValidationError):
            CorruptionLedger(
                entries=(entry, entry),
                seed=0,
                protocol=CorruptionProtocol.PROPORTION,
            )

    def test_one_per_trace_protocol_rejects_repeats(self):
        entries = (
            LedgerEntry(trace_id="1", position=0, original_activity="a"),
            LedgerEntry(trace_id="1", position=1, original_activity="b"),
        )
        with pytest.raises(ValidationError):
            CorruptionLedger(
                entries=entries,
                seed=0,
                protocol=CorruptionProtocol.FIXED_COUNT_ONE_PER_TRACE,
            )

    def test_file_round_trip(self, tmp_path, complete_log):
        _, ledger = corrupt_fixed_count(complete_log, 3, seed=8)
        path = tmp_path / "ledger.csv"
        write_ledger(ledger, path)
        assert read_ledger(path) == ledger

        sidecar = json.loads(sidecar_path(path).read_text())
        assert sidecar == {
            "seed": 8,
            "protocol": "fixed_count",
            "count": 3,
            "generator": GENERATOR_NAME,
        }

    def test_identical_runs_write_identical_files(self, tmp_path):
        log = random_log(seed=1, num_traces=20)
        for name in ("first.csv", "second.csv"):
            _, ledger = corrupt_proportion(log, 0.3, seed=13)
            write_ledger(ledger, tmp_path / name)
        first = (tmp_path / "first.csv").read_bytes()
        assert first == (tmp_path / "second.csv").read_bytes()
        assert first.startswith(b"trace_id,position,original_activity\n")

    def test_sidecar_count_mismatch(self, tmp_path, complete_log):
        _, ledger = corrupt_fixed_count(complete_log, 2, seed=0)
        path = tmp_path / "ledger.csv"
        write_ledger(ledger, path)
        sidecar = json.loads(sidecar_path(path).read_text())
        sidecar["count"] = 5
        sidecar_path(path).write_text(json.dumps(sidecar))
        with pytest.raises(ConsistencyError):
            read_ledger(path)

    def test_bad_header(self, tmp_path, complete_log):
        _, ledger = corrupt_fixed_count(complete_log, 1, seed=0)
        path = tmp_path / "ledger.csv"
        write_ledger(ledger, path)
        path.write_text("case,pos,label\n1,0,a\n")
        with pytest.raises(ParseError):
            read_ledger(path)

    def test_malformed_row(self, tmp_path, complete_log):
        _, ledger = corrupt_fixed_count(complete_log, 1, seed=0)
        path = tmp_path / "ledger.csv"
        write_ledger(ledger, path)
        path.write_text("trace_id,position,original_activity\n1,first,a\n")
        with pytest.raises(ParseError) as caught:
            read_ledger(path)
        assert caught.value.line == 2

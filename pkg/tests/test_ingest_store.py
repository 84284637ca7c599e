"""CSV parsing, series assembly, and the file-backed meter store."""

from __future__ import annotations

import io
from datetime import datetime

import numpy as np
import pytest

from lsm import (
    BadTimestamp,
    EmptyAccount,
    IrregularInterval,
    ManifestConflict,
    MeterStore,
    MissingHeader,
    NegativeEnergy,
    NonNumericEnergy,
    QualityFlag,
    RawReading,
    UnknownAccount,
    assemble_series,
    load_series,
    parse_csv,
    store_series,
)
from tests.conftest import make_series

GOOD = """account_id,timestamp,energy_kwh
a1,2009-06-01T00:00,1.5
a1,2009-06-01T01:00,2.25
a2,2009-06-01T00:00,0.0
"""


class TestParseCsv:
    def test_happy_path(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text(GOOD, encoding="utf-8")
        readings = parse_csv(path)
        assert len(readings) == 3
        assert readings[0] == RawReading("a1", datetime(2009, 6, 1, 0, 0), 1.5)
        assert readings[1].energy_kwh == 2.25

    def test_accepts_stream(self):
        assert len(parse_csv(io.StringIO(GOOD))) == 3

    def test_accepts_bytes(self):
        assert len(parse_csv(GOOD.encode())) == 3

    def test_empty_input(self):
        with pytest.raises(MissingHeader):
            parse_csv(io.StringIO(""))

    def test_wrong_header(self):
        with pytest.raises(MissingHeader):
            parse_csv(io.StringIO("meter,when,kwh\na,2009-01-01T00:00,1\n"))

    def test_bad_timestamp_carries_line_number(self):
        text = GOOD + "a2,not-a-time,1.0\n"
        with pytest.raises(BadTimestamp) as err:
            parse_csv(io.StringIO(text))
        assert err.value.line == 5
        assert "line 5" in str(err.value)

    def test_zone_offset_rejected(self):
        with pytest.raises(BadTimestamp):
            parse_csv(io.StringIO(
                "account_id,timestamp,energy_kwh\na,2009-01-01T00:00+02:00,1\n"))

    def test_sub_minute_rejected(self):
        with pytest.raises(BadTimestamp):
            parse_csv(io.StringIO(
                "account_id,timestamp,energy_kwh\na,2009-01-01T00:00:30,1\n"))

    def test_negative_energy(self):
        with pytest.raises(NegativeEnergy) as err:
            parse_csv(io.StringIO(
                "account_id,timestamp,energy_kwh\na,2009-01-01T00:00,-0.25\n"))
        assert err.value.line == 2

    def test_non_numeric_energy(self):
        with pytest.raises(NonNumericEnergy):
            parse_csv(io.StringIO(
                "account_id,timestamp,energy_kwh\na,2009-01-01T00:00,lots\n"))

    def test_non_finite_energy(self):
        with pytest.raises(NonNumericEnergy):
            parse_csv(io.StringIO(
                "account_id,timestamp,energy_kwh\na,2009-01-01T00:00,nan\n"))

    def test_first_bad_row_wins(self):
        text = ("account_id,timestamp,energy_kwh\n"
                "a,2009-01-01T00:00,1\n"
                "a,bogus,1\n"
                "a,2009-01-01T02:00,-5\n")
        with pytest.raises(BadTimestamp) as err:
            parse_csv(io.StringIO(text))
        assert err.value.line == 3


def _hourly(account, day_hours):
    return [RawReading(account, datetime(2009, 6, 1, h), float(v))
            for h, v in day_hours]


class TestAssemble:
    def test_groups_and_sorts_accounts(self):
        readings = _hourly("b", [(0, 1), (1, 2)]) + _hourly("a", [(0, 3), (1, 4)])
        series = assemble_series(readings)
        assert [s.account_id for s in series] == ["a", "b"]
        assert series[0].interval_minutes == 60

    def test_hole_materialized_as_missing(self):
        readings = _hourly("a", [(0, 1.0), (1, 2.0), (3, 4.0)])
        (s,) = assemble_series(readings)
        assert s.n_slots == 4
        assert s.values[2] == 0.0
        assert s.flags[2] == QualityFlag.MISSING
        assert list(s.flags[[0, 1, 3]]) == [QualityFlag.OBSERVED] * 3

    def test_quarter_hour_grid(self):
        base = datetime(2009, 6, 1)
        readings = [RawReading("a", base.replace(minute=m), 1.0)
                    for m in (0, 15, 30, 45)]
        (s,) = assemble_series(readings)
        assert s.interval_minutes == 15
        assert s.n_slots == 4

    def test_duplicate_timestamp_keeps_last(self, caplog):
        readings = _hourly("a", [(0, 1.0), (1, 2.0)]) + _hourly("a", [(0, 9.0)])
        with caplog.at_level("WARNING"):
            (s,) = assemble_series(readings)
        assert s.values[0] == 9.0
        assert "duplicate" in caplog.text

    def test_modal_gap_tie_prefers_smaller(self):
        # two 60-minute gaps, two 120-minute gaps: hourly wins the tie
        hours = [0, 1, 3, 4, 6]
        readings = _hourly("a", [(h, 1.0) for h in hours])
        (s,) = assemble_series(readings)
        assert s.interval_minutes == 60
        assert s.n_slots == 7

    def test_irregular_modal_gap(self):
        base = datetime(2009, 6, 1)
        readings = [RawReading("a", base, 1.0),
                    RawReading("a", base.replace(minute=17), 1.0),
                    RawReading("a", base.replace(minute=34), 1.0)]
        with pytest.raises(IrregularInterval) as err:
            assemble_series(readings)
        assert err.value.account_id == "a"

    def test_off_grid_straggler(self):
        base = datetime(2009, 6, 1)
        readings = _hourly("a", [(0, 1.0), (1, 1.0), (2, 1.0)])
        readings.append(RawReading("a", base.replace(hour=3, minute=30), 1.0))
        with pytest.raises(IrregularInterval):
            assemble_series(readings)

    def test_single_reading_uses_default_interval(self):
        (s,) = assemble_series([RawReading("a", datetime(2009, 6, 1), 2.0)])
        assert s.interval_minutes == 60
        assert s.n_slots == 1

    def test_no_readings(self):
        with pytest.raises(EmptyAccount):
            assemble_series([])


class TestStore:
    def test_round_trip_bit_exact(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        values = [0.1, 1 / 3, 2.5e-17, 1234.5678901234567]
        s = make_series(values, account_id="acct-1")
        store_series(store, s)
        back = load_series(store, "acct-1")
        assert back == s
        assert back.values.tobytes() == s.values.tobytes()

    def test_reopen_lists_accounts(self, tmp_path):
        root = tmp_path / "store"
        store = MeterStore(root)
        store.save(make_series([1.0], account_id="x"))
        store.save(make_series([2.0], account_id="y"), status="cleansed")
        again = MeterStore(root)
        assert again.accounts() == ["x", "y"]
        assert again.entry("y")["status"] == "cleansed"
        assert "x" in again and "zz" not in again

    def test_unknown_account(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        with pytest.raises(UnknownAccount):
            store.load("ghost")

    def test_conflict_detection_and_refresh(self, tmp_path):
        root = tmp_path / "store"
        first = MeterStore(root)
        second = MeterStore(root)
        first.save(make_series([1.0], account_id="x"))
        with pytest.raises(ManifestConflict):
            second.save(make_series([2.0], account_id="y"))
        second.refresh()
        second.save(make_series([2.0], account_id="y"))
        first.refresh()
        assert first.accounts() == ["x", "y"]

    def test_status_and_extra_counters_persist(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        store.save(make_series([1.0], account_id="x"))
        store.save(make_series([1.0], account_id="x"), status="dropped",
                   estimated_excised=7)
        entry = store.entry("x")
        assert entry["status"] == "dropped"
        assert entry["estimated_excised"] == 7
        assert store.kept_accounts() == []
        # a later save without status keeps the previous one
        store.save(make_series([2.0], account_id="x"))
        assert store.entry("x")["status"] == "dropped"

    def test_awkward_account_ids_survive(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        for account_id in ("with/slash", "sp ace", "..", "café"):
            store.save(make_series([1.0, 2.0], account_id=account_id))
        again = MeterStore(tmp_path / "store")
        assert again.accounts() == sorted(["with/slash", "sp ace", "..", "café"])
        assert again.load("with/slash").values[1] == 2.0

    def test_revision_counts_writes(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        assert store.revision == 0
        store.save(make_series([1.0], account_id="x"))
        store.save(make_series([1.0], account_id="y"))
        assert store.revision == 2

    def test_save_flags_round_trip(self, tmp_path):
        store = MeterStore(tmp_path / "store")
        flags = [QualityFlag.OBSERVED, QualityFlag.INTERPOLATED,
                 QualityFlag.YEAR_AVERAGED, QualityFlag.ESTIMATED,
                 QualityFlag.MISSING]
        s = make_series([1, 2, 3, 4, 0], flags=flags, account_id="f")
        store.save(s)
        assert np.array_equal(store.load("f").flags, np.array(flags, dtype=np.uint8))

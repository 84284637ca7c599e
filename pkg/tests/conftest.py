"""Shared builders for the test suite."""

from __future__ import annotations

from datetime import datetime

import numpy as np
import pytest

from lsm import DailyProfile, ProfileSet, QualityFlag, ReadingSeries

# filled by the acceptance tests; echoed after the run so the one-line
# verdicts survive output capture
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


def make_series(
    values,
    flags=None,
    account_id="acct",
    start=datetime(2009, 1, 1),
    interval_minutes=60,
) -> ReadingSeries:
    values = np.asarray(values, dtype=np.float64)
    if flags is None:
        flags = np.full(values.size, QualityFlag.OBSERVED, dtype=np.uint8)
    else:
        flags = np.asarray(flags, dtype=np.uint8)
    return ReadingSeries(account_id=account_id, interval_minutes=interval_minutes,
                         start=start, values=values, flags=flags)


def make_profile_set(matrix, ids=None, normalized=None, label="test") -> ProfileSet:
    """Rows of `matrix` become profiles; normalization state is inferred
    unless forced."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if ids is None:
        ids = [f"p{i:03d}" for i in range(matrix.shape[0])]
    profiles = []
    for row, account_id in zip(matrix, ids):
        peak = float(row.max())
        is_norm = normalized if normalized is not None else peak == 1.0
        profiles.append(DailyProfile(
            account_id=account_id, filter_label=label, values=row,
            day_count=1, normalized=is_norm,
            norm_max=peak if is_norm else 0.0))
    return ProfileSet(filter=None, profiles=profiles)


@pytest.fixture
def rng():
    return np.random.default_rng(20090601)

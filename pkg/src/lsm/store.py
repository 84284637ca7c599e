"""File-based store for reading series: one CSV per account plus a JSON manifest.

Layout::

    <root>/manifest.json
    <root>/series/<account_id>.csv     # timestamp,energy_kwh,flag

The manifest is the single source of truth for account listing and carries a
revision counter. Writes are single-writer: each handle remembers the
revision it last saw and refuses to write over changes made by another
handle (``ManifestConflict``). All file replacements are write-new-then-rename.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from datetime import datetime
from pathlib import Path
from urllib.parse import quote

import numpy as np

from .errors import ManifestConflict, UnknownAccount
from .series import ReadingSeries, flag_from_name, flag_name

MANIFEST_NAME = "manifest.json"
SERIES_DIR = "series"

STATUS_RAW = "raw"
STATUS_CLEANSED = "cleansed"
STATUS_DROPPED = "dropped"


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _series_filename(account_id: str) -> str:
    # account ids are opaque; keep filenames safe and reversible
    return quote(account_id, safe="") + ".csv"


def _series_to_csv(series: ReadingSeries) -> str:
    lines = ["timestamp,energy_kwh,flag"]
    ts = series.start
    step = series.step
    for v, f in zip(series.values, series.flags):
        lines.append(f"{ts.isoformat(timespec='minutes')},{float(v)!r},{flag_name(f)}")
        ts = ts + step
    return "\n".join(lines) + "\n"


def _series_from_csv(account_id: str, interval_minutes: int, text: str) -> ReadingSeries:
    reader = csv.reader(text.splitlines())
    header = next(reader)
    if header != ["timestamp", "energy_kwh", "flag"]:
        raise ValueError(f"corrupt series file for {account_id!r}: bad header {header}")
    times: list[datetime] = []
    values: list[float] = []
    flags: list[int] = []
    for row in reader:
        times.append(datetime.fromisoformat(row[0]))
        values.append(float(row[1]))
        flags.append(flag_from_name(row[2]))
    return ReadingSeries(
        account_id,
        interval_minutes,
        times[0],
        np.array(values, dtype=np.float64),
        np.array(flags, dtype=np.uint8),
    )


class MeterStore:
    """Handle on a store directory. Multi-reader, single-writer."""

    def __init__(self, root):
        self.root = Path(root)
        self.series_dir = self.root / SERIES_DIR
        self.series_dir.mkdir(parents=True, exist_ok=True)
        self._manifest_path = self.root / MANIFEST_NAME
        if self._manifest_path.exists():
            self._manifest = json.loads(self._manifest_path.read_text(encoding="utf-8"))
        else:
            self._manifest = {"revision": 0, "accounts": {}}
            self._write_manifest()

    # --- manifest plumbing ---------------------------------------------------

    def _write_manifest(self) -> None:
        _atomic_write(self._manifest_path,
                      json.dumps(self._manifest, indent=2, sort_keys=True) + "\n")

    def _check_conflict(self) -> None:
        on_disk = json.loads(self._manifest_path.read_text(encoding="utf-8"))
        if on_disk["revision"] != self._manifest["revision"]:
            raise ManifestConflict(
                f"store at {self.root} changed underneath this handle "
                f"(saw revision {self._manifest['revision']}, disk has {on_disk['revision']}); "
                "call refresh() to resync")

    def refresh(self) -> None:
        """Re-read the manifest, accepting changes made by other handles."""
        self._manifest = json.loads(self._manifest_path.read_text(encoding="utf-8"))

    @property
    def revision(self) -> int:
        return self._manifest["revision"]

    # --- account listing --------------------------------------------------------

    def accounts(self) -> list[str]:
        return sorted(self._manifest["accounts"])

    def kept_accounts(self) -> list[str]:
        """Accounts not dropped by cleansing."""
        return [a for a in self.accounts()
                if self._manifest["accounts"][a].get("status") != STATUS_DROPPED]

    def entry(self, account_id: str) -> dict:
        try:
            return self._manifest["accounts"][account_id]
        except KeyError:
            raise UnknownAccount(f"account {account_id!r} not in store {self.root}") from None

    def __contains__(self, account_id: str) -> bool:
        return account_id in self._manifest["accounts"]

    # --- series I/O -----------------------------------------------------------------

    def save(self, series: ReadingSeries, status: str | None = None, **extra) -> "MeterStore":
        """Persist a series, replacing any previous one for the same account.

        ``extra`` keys are merged into the account's manifest entry (used by
        cleansing to keep cumulative counters).
        """
        self._check_conflict()
        filename = _series_filename(series.account_id)
        _atomic_write(self.series_dir / filename, _series_to_csv(series))
        entry = dict(self._manifest["accounts"].get(series.account_id, {}))
        entry.update(
            file=f"{SERIES_DIR}/{filename}",
            interval_minutes=series.interval_minutes,
            start=series.start.isoformat(timespec="minutes"),
            slots=series.n_slots,
        )
        if status is not None:
            entry["status"] = status
        else:
            entry.setdefault("status", STATUS_RAW)
        entry.update(extra)
        self._manifest["accounts"][series.account_id] = entry
        self._manifest["revision"] += 1
        self._write_manifest()
        return self

    def load(self, account_id: str) -> ReadingSeries:
        entry = self.entry(account_id)
        text = (self.root / entry["file"]).read_text(encoding="utf-8")
        return _series_from_csv(account_id, entry["interval_minutes"], text)

    def set_status(self, account_id: str, status: str, **extra) -> None:
        self._check_conflict()
        entry = self.entry(account_id)
        entry["status"] = status
        entry.update(extra)
        self._manifest["revision"] += 1
        self._write_manifest()


def store_series(store: MeterStore, series: ReadingSeries, status: str | None = None) -> MeterStore:
    return store.save(series, status=status)


def load_series(store: MeterStore, account_id: str) -> ReadingSeries:
    return store.load(account_id)

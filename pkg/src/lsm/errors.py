"""Exception hierarchy for the load-shape mining pipeline.

Every error raised on purpose by this package derives from
:class:`LoadShapeError`, so callers (and the CLI) can distinguish data
problems from genuine bugs. Plain ``OSError`` is allowed to propagate
from file operations.
"""


class LoadShapeError(Exception):
    """Base class for all data and usage errors raised by lsm."""


# --- CSV parsing -----------------------------------------------------------

class MissingHeader(LoadShapeError):
    """Input CSV lacks the expected header row."""


class RowError(LoadShapeError):
    """A data row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BadTimestamp(RowError):
    pass


class NegativeEnergy(RowError):
    pass


class NonNumericEnergy(RowError):
    pass


# --- series assembly and storage -------------------------------------------

class IrregularInterval(LoadShapeError):
    """Reading gaps do not form a 15- or 60-minute grid."""

    def __init__(self, account_id: str, message: str = ""):
        super().__init__(f"account {account_id!r}: {message or 'irregular interval'}")
        self.account_id = account_id


class EmptyAccount(LoadShapeError):
    """No readings were supplied."""


class ManifestConflict(LoadShapeError):
    """Another writer updated the store since this handle last synced."""


class UnknownAccount(LoadShapeError):
    """Account id not present in the store manifest."""


# --- cleansing --------------------------------------------------------------

class GapTooLong(LoadShapeError):
    """Gap exceeds the allowed span for linear interpolation."""


class BoundaryMissing(LoadShapeError):
    """Gap touches the series edge or a Missing neighbor; no line endpoints."""


class NoSiblingCoverage(LoadShapeError):
    """No sibling year had usable data at any of the gap's calendar slots."""


# --- profiles ----------------------------------------------------------------

class WrongInterval(LoadShapeError):
    """Series interval does not match what the operation requires."""


class NoMatchingDays(LoadShapeError):
    """Calendar filter selected no complete days from the series."""


class EmptyDays(LoadShapeError):
    """Cannot average zero day-vectors."""


class AllZeroProfile(LoadShapeError):
    """Profile maximum is zero; peak normalization is undefined."""


# --- distance measures --------------------------------------------------------

class LengthMismatch(LoadShapeError):
    """Vectors being compared have different lengths."""


class ZeroMaximum(LoadShapeError):
    """Peak-normalized distance needs a strictly positive maximum."""


# --- clustering ----------------------------------------------------------------

class KGreaterThanN(LoadShapeError):
    """Requested more clusters than there are profiles."""


class EmptyProfileSet(LoadShapeError):
    """No profiles to cluster."""


class UnassignedAccount(LoadShapeError):
    """A profile has no cluster assignment."""


# --- reporting -------------------------------------------------------------------

class NoCommonAccounts(LoadShapeError):
    """The two clusterings share no accounts; drift is undefined."""


# --- synthesis ---------------------------------------------------------------------

class InvalidSpec(LoadShapeError):
    """Synthetic dataset specification violates its invariants."""

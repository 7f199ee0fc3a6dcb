"""Exception types raised across the toolkit.

Two broad families matter to callers: ConfigError means the run was set up
wrong (bad paths, bad config file, bad flag values) and maps to exit code 1
in the CLI; DataError means the inputs themselves are unusable or an
analysis precondition failed, and maps to exit code 2.
"""


class AuditError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(AuditError):
    """Run configuration is missing, malformed, or self-contradictory."""


class DataError(AuditError):
    """Input data or analysis preconditions are violated."""


# ---- corpus ingestion ----

class MalformedRecord(DataError):
    """A wire-format line failed validation.

    Carries the 1-based line number and the offending field so the bad
    line can be found without re-running validation by hand.
    """

    def __init__(self, line_number: int, field: str, message: str):
        self.line_number = line_number
        self.field = field
        super().__init__(f"line {line_number}, field {field!r}: {message}")


class DuplicateClaimId(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class UnknownClaimId(DataError):
    pass


class ScoreOutOfRange(DataError):
    pass


class MissingScores(DataError):
    pass


# ---- metrics ----

class LengthMismatch(DataError):
    pass


# ---- shared by consistency / overlap / chunking ----

class CoverageMismatch(DataError):
    """A prediction set does not cover the claims an analysis needs."""


# ---- quantification and calibration ----

class EmptySlice(DataError):
    pass


class NoSystems(DataError):
    pass


class NoResponses(DataError):
    pass


class DegenerateClassifier(DataError):
    """The adjusted-count transform is undefined for this classifier."""


class EmptyCalibration(DataError):
    pass


class OneClassOnly(DataError):
    pass


class TooFewSystems(DataError):
    pass


# ---- ranking ----

class InvalidCounts(DataError):
    pass


class PairSetMismatch(DataError):
    pass


class TooShort(DataError):
    pass


class ZeroVariance(DataError):
    pass


# ---- surface overlap ----

class EmptyGroup(DataError):
    pass


# ---- chunking ----

class EmptyChunkScores(DataError):
    pass


# ---- report rendering ----

class RaggedRows(DataError):
    pass

"""Exception hierarchy shared by every fsep module.

All exceptions derive from :class:`FsepError` so callers (CLI, service)
can map any data/computation failure to a single error path while the
class names stay specific enough for tests and programmatic handling.
"""


class FsepError(Exception):
    """Base class for all fsep errors."""


# --- bundle I/O -------------------------------------------------------------

class MissingFile(FsepError):
    """A required bundle file is absent."""


class BadMagic(FsepError):
    """A binary file does not start with the expected magic/version."""


class DimensionMismatch(FsepError):
    """Row/column counts of related arrays disagree."""


class NonFiniteValue(FsepError):
    """A NaN or infinity was found where finite values are required."""


class MetaParseError(FsepError):
    """meta.json is malformed or violates its field constraints."""


class IoError(FsepError):
    """An underlying read/write operation failed."""


class InvariantViolation(FsepError):
    """An in-memory object violates its typed invariants."""


# --- scoring ----------------------------------------------------------------

class EmptyInput(FsepError):
    """An operation received zero rows."""


class LabelOutOfRange(FsepError):
    """A label falls outside [0, k)."""


class DegenerateDenominator(FsepError):
    """A score denominator is non-positive (e.g. m <= k)."""


class InsufficientSamples(FsepError):
    """Too few samples for the requested statistic."""


class EigenFailure(FsepError):
    """An eigendecomposition did not converge."""


class ZeroBandwidth(FsepError):
    """The kernel bandwidth heuristic produced zero."""


class InvalidK(FsepError):
    """The requested number of classes/clusters is not usable."""


# --- evaluation harness -----------------------------------------------------

class LengthMismatch(FsepError):
    """Two paired sequences differ in length."""


class DegenerateInput(FsepError):
    """A regression/correlation input carries no usable variation."""


class MissingReference(FsepError):
    """A reference bundle is required by the requested metric but absent."""


class MissingTruth(FsepError):
    """A test bundle has neither a stored true error nor labels."""


# --- synthesis --------------------------------------------------------------

class ConfigInvalid(FsepError):
    """A synthetic-suite configuration violates its constraints."""

"""Exception taxonomy shared across the toolkit.

Every error raised by public API surfaces derives from FreqAdvError so
callers can catch one base type at process boundaries (CLI, server).
"""


class FreqAdvError(Exception):
    """Base class for all toolkit errors."""


class InvalidImageError(FreqAdvError):
    """Image payload violates shape, range, or decodability requirements."""


class DimensionMismatchError(InvalidImageError):
    """Two images or an image/spectrum pair disagree on dimensions."""


class InvalidBandError(FreqAdvError):
    """Band bounds are out of order or outside [0, 1]."""


class EmptyBandError(FreqAdvError):
    """A band selects no frequency coordinates on the given grid."""


class SymmetryViolationError(FreqAdvError):
    """Inverse transform produced an imaginary part above tolerance."""


class OracleError(FreqAdvError):
    """Base class for oracle transport and interpretation failures."""


class OracleUnavailableError(OracleError):
    """Transport-level failure talking to an oracle endpoint."""


class OracleParseError(OracleError):
    """Oracle reply could not be interpreted (for example no usable score)."""


class ProtocolError(OracleError):
    """Wire message violates the published request/response contract."""


class UndefinedSimilarityError(FreqAdvError):
    """Cosine similarity requested against a zero-norm vector."""


class EmptyInputError(FreqAdvError):
    """A statistics routine received an empty collection."""


class ManifestError(FreqAdvError):
    """Dataset manifest is malformed; message names the offending line."""


class PersistError(FreqAdvError):
    """Run artifacts could not be written completely."""


class ConfigError(FreqAdvError):
    """Attack or server configuration is inconsistent."""

"""Error taxonomy shared by every module.

All failures raised by this package derive from MBFlowError, so callers
(including the command line driver, which maps them to exit codes) can
distinguish our diagnostics from genuine bugs.
"""


class MBFlowError(Exception):
    """Base class for every error this package raises deliberately."""


class InvariantViolation(MBFlowError):
    """A structural invariant (such as the square of a differential
    vanishing) failed on data that was otherwise well-formed."""


class UnsupportedRing(MBFlowError):
    """An operation was requested over a coefficient ring it does not
    support (e.g. a spectral sequence over the integers)."""


class ShapeMismatch(MBFlowError):
    """Two pieces of data that must be composable have incompatible
    shapes or degrees."""


class OrientationRequired(MBFlowError):
    """A Thom-twist style degree shift over the integers was requested
    on an object that was not asserted orientable."""


class NotDownwardClosed(MBFlowError):
    """A subset used to split a category has a correspondence escaping it."""


class ChainMapViolation(MBFlowError):
    """Blocks that must assemble to a chain map fail to commute with the
    differentials; the message locates the first offending generator."""


class DifferentialSquaredNonzero(MBFlowError):
    """A differential built from trajectory counts does not square to zero."""


class InvalidRange(MBFlowError):
    """Numeric arguments outside their documented range."""


class CutoffBeyondStabilityRange(MBFlowError):
    """A truncated equivariant model was interrogated beyond the degree
    range in which it approximates the untruncated answer."""


class ParseError(MBFlowError):
    """Input bytes are not valid JSON."""


class SchemaError(MBFlowError):
    """JSON parsed but does not conform to the category file schema;
    the message carries the offending field path."""


class ValidationError(MBFlowError):
    """A parsed category failed semantic validation."""

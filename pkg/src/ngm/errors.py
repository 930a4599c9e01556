"""Exception hierarchy shared by all ngm modules."""


class NGMError(Exception):
    """Base class for errors raised by ngm."""


class InvalidInputError(NGMError, ValueError):
    """Malformed arguments: wrong shapes, non-finite values, bad indices."""


class DegenerateDataError(NGMError, ValueError):
    """Data that is well-formed but carries no usable spread (e.g. all points equal)."""


class RankDeficiencyError(NGMError):
    """Requested more spectral components than the matrix supports."""


class SolverError(NGMError):
    """Linear solve failed numerically."""


class SelectionError(NGMError):
    """Model selection could not pick a value from the supplied grid."""


class GeneratorError(NGMError):
    """A simulation generator produced an object violating its construction."""

"""Semantic exception hierarchy shared by all mispar modules."""


class MisparError(Exception):
    """Base class for every error raised by this package."""


class NoSignChange(MisparError):
    """Root bracket endpoints do not straddle a sign change."""


class MaxIterExceeded(MisparError):
    """An iterative routine ran out of its iteration budget."""


class NonFiniteValue(MisparError):
    """A function returned nan/inf where a finite value is required."""


class DimensionError(MisparError):
    """Requested problem dimensions collapse to zero."""


class NoConvergence(MisparError):
    """A self-consistent solve failed; the message carries diagnostics."""


class BracketFailure(MisparError):
    """No sign change could be located for a required root."""


class NoWindow(MisparError):
    """Perfect-recovery window is empty for the requested parameters."""


class NumericalRankFailure(MisparError):
    """A matrix factorization failed during fitting."""


class MissingColumn(MisparError):
    """A table lacks a column required by the renderer."""

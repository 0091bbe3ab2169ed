"""Exception hierarchy shared by all modules."""


class PerturbationError(Exception):
    """Base class for errors raised by :mod:`perturbseries`."""


class SpectralIndexError(PerturbationError, IndexError):
    """Raised when a 1-based eigenvalue index lies outside ``1..d``."""


class DegenerateGapError(PerturbationError):
    """Raised when an operation needs a simple eigenvalue but the gap is zero."""


class BoundInapplicableError(PerturbationError):
    """Raised when the precondition of a remainder bound is violated.

    Distinct from a numerical failure: the inputs are valid, the bound just
    makes no claim for them.
    """


class DivergenceError(PerturbationError):
    """Raised when an adaptively truncated series fails to contract."""


class ContourError(PerturbationError):
    """Raised when an eigenvalue sits on (or too close to) an integration contour."""


class StencilError(PerturbationError):
    """Raised when a finite-difference stencil crosses an eigenvalue crossing."""

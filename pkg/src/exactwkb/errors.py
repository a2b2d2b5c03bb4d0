"""Exception hierarchy shared by all solver modules."""


class ExactWkbError(Exception):
    """Base class for all solver failures."""


class ValidationError(ExactWkbError, ValueError):
    """Invalid input (degree, coefficients, options) rejected before any computation."""


class TurningPointOnPath(ExactWkbError):
    """V(q) + lambda has a real zero on the integration half-line [q, +inf)."""


class NotConverged(ExactWkbError):
    """An iterative scheme stalled before reaching its tolerance."""


class NotContracting(ExactWkbError):
    """Fixed-point sweeps stopped contracting (error ratio persistently near 1)."""


class PoleAtLambda(ExactWkbError):
    """The spectral parameter hit a determinant zero, lambda = -E_k."""


class NoRoot(ExactWkbError):
    """Counting-function inversion found no admissible positive root."""


class BracketFailure(ExactWkbError):
    """Eigenvalue bracketing failed for a shooting index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergentSector(ExactWkbError):
    """A conjugate-sector eigenvalue left its trust bracket during iteration."""

    def __init__(self, message, ell=None, k=None):
        super().__init__(message)
        self.ell = ell
        self.k = k


class IllConditioned(ExactWkbError):
    """A least-squares design matrix exceeded the allowed condition number."""


class Overflow(ExactWkbError):
    """A solution magnitude left the representable range even in log form."""

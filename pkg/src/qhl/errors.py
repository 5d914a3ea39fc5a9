"""Exception types shared across the package."""


class QhlError(Exception):
    pass


class NonPositiveMetric(QhlError):
    """Metric density is not strictly positive at some quadrature node."""


class BadLattice(QhlError):
    """Torus lattice parameter tau has Im(tau) <= 0."""


class TruncationTooSmall(QhlError):
    """Theta-series truncation leaves a tail above the accepted bound."""


class SingularGram(QhlError):
    """Gram matrix is not numerically positive definite."""


class BasePoint(QhlError):
    """All sections vanish at the requested point."""


class OutOfBudget(QhlError):
    """Requested dense problem exceeds the configured size cap."""


class NoConvergence(QhlError):
    """Fixed-point iteration did not reach tolerance within max_iter."""

    def __init__(self, iterations, defect, tol):
        self.iterations = iterations
        self.defect = defect
        self.tol = tol
        super().__init__(
            f"no convergence after {iterations} iterations: "
            f"defect {defect:.3e} > tol {tol:.3e}"
        )


class IllConditioned(QhlError):
    """Mass matrix condition number exceeds the accepted bound."""


class IllConditionedFit(QhlError):
    """Least-squares design matrix condition number exceeds the bound."""

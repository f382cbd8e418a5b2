"""Exception types shared across the laboratory modules."""


class MkdvLabError(Exception):
    """Base class for all laboratory errors."""


class DuplicateVelocity(MkdvLabError):
    """Two wave objects share the same velocity (distinctness violated)."""


class HypothesisViolated(MkdvLabError):
    """The second-smallest velocity is not positive and no override was given."""


class TailsTooLarge(MkdvLabError):
    """A profile's decay envelope at the domain boundary exceeds the budget."""


class BlowUp(MkdvLabError):
    """Time integration produced non-finite or absurdly large values."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"solution blew up at t={t:.6g}")


class NoConvergence(MkdvLabError):
    """Newton iteration for the translation offsets did not converge."""


class SingularJacobian(MkdvLabError):
    """Near-degenerate modulation system (ill-conditioned Jacobian)."""


class EmptyAdmissibleInterval(MkdvLabError):
    """No admissible first cutoff speed exists (should not happen for valid data)."""


class EigensolveFailure(MkdvLabError):
    """The dense symmetric eigensolve for the coercivity check failed."""


class NonPositiveDistance(MkdvLabError):
    """Exponential rate fit requested on non-positive distances."""

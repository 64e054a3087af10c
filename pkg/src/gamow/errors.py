"""Exception hierarchy shared by every layer of the package."""


class GamowError(Exception):
    """Base class for all numeric failures raised by gamow."""


class ConfigError(GamowError):
    """Malformed or unknown experiment configuration."""


class InvariantError(GamowError):
    """A built-in invariant check failed."""

    def __init__(self, name, detail=""):
        self.name = name
        super().__init__(f"invariant '{name}' failed" + (f": {detail}" if detail else ""))


class CutError(GamowError):
    """Evaluation requested on the branch cut [0, inf)."""


class ToleranceError(GamowError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, msg, achieved=None):
        self.achieved = achieved
        super().__init__(f"{msg} (achieved error estimate {achieved!r})")


class SingularityError(GamowError):
    """Evaluation at a listed singularity of the form factor."""


class PoleSearchError(GamowError):
    """Newton iteration failed to converge; `trace` holds the iterates."""

    def __init__(self, msg, trace=()):
        self.trace = list(trace)
        super().__init__(msg)


class ModelViolationError(GamowError):
    """A pole landed where the model forbids it (upper half-plane)."""


class ContourError(GamowError):
    """No admissible background contour."""


class ResolutionError(GamowError):
    """Sampling grid too coarse for the requested test."""


class ContinuationError(GamowError):
    """Amplitude cannot be continued across the deformation strip."""


class DomainError(GamowError):
    """Argument outside the admissible domain (e.g. negative time)."""


class ShapeError(GamowError):
    """Incompatible grids or array shapes."""


class StateError(GamowError):
    """State lacks data required by the operation."""


class PreconditionError(GamowError):
    """Operation precondition is not satisfied."""


class ObservableError(GamowError):
    """Observable is not Hermitian."""


class ConsistencyError(GamowError):
    """Projector recipe violates the idempotency relations."""

    def __init__(self, msg, residual=None):
        self.residual = residual
        super().__init__(f"{msg} (residual {residual!r})")


class SingularEquilibriumError(GamowError):
    """Equilibrium weight vanishes where the perturbation has support."""


class HermiticityError(GamowError):
    """Matrix expected to be Hermitian is not."""


class PaddingError(GamowError):
    """Finite differences reach the grid edge."""


class SupportError(GamowError):
    """Smoothed phase-space density is non-positive on the region."""

    def __init__(self, msg, mask=None, mass=None):
        self.mask = mask
        self.mass = mass
        super().__init__(msg)

"""Exception and warning hierarchy shared by all modules."""


class WellsepError(Exception):
    """Base class for every error raised by the library."""


class NonConvergent(WellsepError):
    """Adaptive quadrature exceeded its panel budget or tolerance."""


class InvalidStrength(WellsepError):
    """A potential strength is outside the admissible range."""


class DegenerateStrengths(WellsepError):
    """The two wells are too close to degenerate for a nondegenerate formula."""


class RootBracketingFailed(WellsepError):
    """Sign changes of a transcendental equation could not be isolated."""


class EnergyCollision(WellsepError):
    """A Green operator is evaluated at (or next to) a retained eigenvalue."""


class DegeneracyDetected(WellsepError):
    """The reference level is almost degenerate with a level of the other well."""


class ZeroCoupling(WellsepError):
    """Transfer element and gap both vanish, nothing lifts the degeneracy."""


class NotDegenerate(WellsepError):
    """States handed to the multi-state solver are not at a common energy."""


class ShapeMismatch(WellsepError):
    """Block dimensions do not match the requested operation."""


class ConvergenceFailure(WellsepError):
    """The grid eigensolver did not deliver the requested eigenpairs."""


class GridMismatch(WellsepError):
    """Grids handed to Richardson extrapolation are not nested."""


class ConfigInvalid(WellsepError):
    """An experiment configuration failed validation."""


class ComputeError(WellsepError):
    """A numerical stage failed while running an experiment."""


class WellsepWarning(UserWarning):
    """Base class for warnings emitted by the library."""


class RegimeWarning(WellsepWarning):
    """Inputs lie outside the regime in which an approximation is justified."""


class UnresolvedDegeneracy(WellsepWarning):
    """Some degeneracy survives the order of theory that was applied."""

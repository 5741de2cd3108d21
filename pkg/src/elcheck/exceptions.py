"""Exception types shared across the package."""


class ModelCheckError(Exception):
    """Base class for all elcheck errors."""


class DataError(ModelCheckError):
    """Invalid input data or configuration."""


class HullViolationError(ModelCheckError):
    """All nonzero marks share a sign, so the moment constraint is infeasible."""


class ConvergenceError(ModelCheckError):
    """An iterative solver exhausted its budget."""


class SingularFitError(ModelCheckError):
    """A design or curvature matrix was not invertible."""


class SeparationError(ModelCheckError):
    """Logistic likelihood is monotone in some direction (divergent MLE)."""


class DegenerateGridError(ModelCheckError):
    """Every grid point has zero estimated variance; nothing to calibrate."""


class ReplicateFailureError(ModelCheckError):
    """Too many bootstrap or Monte Carlo replicates failed."""

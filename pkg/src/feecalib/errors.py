"""Exception types shared across the package."""


class FeeCalibError(Exception):
    """Base class for all library-specific failures."""


class SingularGeometry(FeeCalibError):
    """A trigonometric denominator fell below its stability margin."""


class EmptyFeasibleSet(FeeCalibError):
    """No failure-surface angle satisfies the wedge feasibility constraints."""


class InfeasibleGeometry(FeeCalibError):
    """Wedge geometry violates a hard angular or depth precondition."""


class DegenerateRegion(FeeCalibError):
    """Swept-area region is self-intersecting or otherwise ill-formed."""


class NonMonotonePath(FeeCalibError):
    """Trajectory doubles back in x beyond tolerance."""


class NonFiniteObjective(FeeCalibError):
    """Objective returned NaN/Inf and the solver could not recover."""


class EmptySeries(FeeCalibError):
    """A metric was requested on an empty series."""


class DegenerateDepths(FeeCalibError):
    """Every sample of the cycle has zero penetration depth."""


class SolverFailure(FeeCalibError):
    """Every optimization start failed."""


class ConfigError(FeeCalibError):
    """Invalid run configuration or input file."""

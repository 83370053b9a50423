"""Exception types raised by the prandtl4 package."""


class Prandtl4Error(Exception):
    """Base class for all package errors."""


class QuadratureNotConverged(Prandtl4Error):
    """Panel refinement budget exhausted before the requested tolerance was met."""


class TailNotNegligible(Prandtl4Error):
    """The kernel row has not decayed by the end of the grid."""


class GridMismatch(Prandtl4Error):
    pass


class CompatibilityViolated(Prandtl4Error):
    """Boundary traces of a datum are too large for the requested representation."""


class TimeBelowMinimum(Prandtl4Error, ValueError):
    pass


class DegenerateF(Prandtl4Error):
    pass


class InvalidBeta(Prandtl4Error, ValueError):
    pass


class PicardDiverged(Prandtl4Error):
    pass


class StepUnderflow(Prandtl4Error):
    pass

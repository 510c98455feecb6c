"""Exception types raised by the solvers and integrators."""


class PolarVIError(Exception):
    """Base class for all errors raised by polarvi."""


class DimensionError(PolarVIError, ValueError):
    pass


class SingularInput(PolarVIError, ValueError):
    pass


class NegativeDeterminant(PolarVIError, ValueError):
    pass


class NearSingular(PolarVIError, ValueError):
    pass


class IllConditioned(PolarVIError, ValueError):
    pass


class ZeroWeight(PolarVIError, ValueError):
    pass


class PoleSingularity(PolarVIError, ValueError):
    pass


class NoConvergence(PolarVIError, RuntimeError):
    """A fixed-point or Newton iteration hit its iteration cap.

    Attributes
    ----------
    iterations : int
        Number of iterations performed.
    residual : float
        Size of the last update when the iteration stopped.
    step : int or None
        Index of the failing step when raised from a trajectory driver.
    """

    def __init__(self, message, iterations=0, residual=float("nan"), step=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.step = step

    def __str__(self):
        base = super().__str__()
        extra = f" (iterations={self.iterations}, last update={self.residual:.3e}"
        if self.step is not None:
            extra += f", step={self.step}"
        return base + extra + ")"

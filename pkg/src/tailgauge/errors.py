"""Exception and warning types shared across tailgauge."""


class ValidationError(ValueError):
    """Invalid input or configuration (bad parameter domain, degenerate data)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its accuracy or convergence target."""


class QuadratureError(NumericalError):
    """Adaptive quadrature could not reach the requested tolerance."""


class OutsideValidatedRegionWarning(UserWarning):
    """Emitted when results are computed outside the validated (n, xi) region."""

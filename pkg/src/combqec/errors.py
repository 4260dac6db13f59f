"""Exception types shared across the package."""


class CombQecError(Exception):
    """Base class for package-specific failures."""


class ConfigurationError(CombQecError):
    """A run configuration or step-size choice is unusable."""


class NumericError(CombQecError):
    """An integrator or state lost numerical validity (trace drift, underflow)."""


class CalibrationError(CombQecError):
    """A calibration sweep failed to bracket its target."""


class FitError(CombQecError):
    """A least-squares fit is degenerate or unidentifiable."""

"""Exception hierarchy. Every error carries a short machine-readable ``category``."""


class SaddlescapeError(Exception):
    category = "error"


class InvalidMeshError(SaddlescapeError, ValueError):
    category = "invalid-mesh"


class ConfigurationError(SaddlescapeError, ValueError):
    category = "configuration"


class ConfigParseError(ConfigurationError):
    category = "config-parse"

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class DegenerateDirectionError(SaddlescapeError, ArithmeticError):
    category = "degenerate-direction"


class FactorizationError(SaddlescapeError, ArithmeticError):
    category = "factorization"


class SingularUpdateError(SaddlescapeError, ArithmeticError):
    category = "singular-update"


class BlowUpError(SaddlescapeError, OverflowError):
    category = "blow-up"


class SpectralFailureError(SaddlescapeError, ArithmeticError):
    category = "spectral-failure"

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class StepError(SaddlescapeError):
    """Wraps a failure inside the time loop with the step index attached."""

    def __init__(self, step, cause):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.category = getattr(cause, "category", "error")


class IdentityViolationError(SaddlescapeError, ArithmeticError):
    """A discrete identity that the scheme satisfies exactly was broken."""

    category = "identity-violation"

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its evaluation budget."""


class GeneralPositionError(RuntimeError):
    """Network parameters put some pre-activation too close to a ReLU kink.

    ``violations`` lists ``(layer, unit, point)`` triples, 1-based in the layer
    index, so the caller can report them and resample.
    """

    def __init__(self, message, violations):
        super().__init__(message)
        self.violations = list(violations)


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

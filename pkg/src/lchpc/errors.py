"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument breaks an operation's precondition (shape, range, ...)."""


class NumericalFailure(ArithmeticError):
    """A numerical routine did not converge."""


class UnsupportedConfiguration(ContractViolation):
    """The requested codebook/array configuration is not supported."""


class DegenerateCombinerError(ContractViolation):
    """A combiner Gram matrix (R_n or K_W) is singular or not positive definite."""


class ConfigError(ValueError):
    """Simulation configuration failed validation.

    ``violations`` holds one message per violated constraint.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite value."""


class ConfigError(ValueError):
    """An experiment config file is missing, malformed, or inconsistent."""

"""Exception hierarchy shared by every subpackage."""


class EntropicSacError(Exception):
    """Base class for all library errors."""


class ConfigError(EntropicSacError):
    """Bad configuration: shape mismatch, unknown option, schema violation."""


class ContractError(EntropicSacError):
    """A caller broke an operation's precondition."""


class NumericError(EntropicSacError):
    """A computation produced NaN or Inf."""


class DomainError(ContractError):
    """An argument lies outside the mathematical domain of the operation."""


class InfeasibleError(EntropicSacError):
    """The entropy constraint cannot be satisfied (target above log|A|)."""


class SizeError(EntropicSacError):
    """An exhaustive enumeration would be too large to run."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class InputFileError(ConfigError):
    """A named input file is missing or unreadable."""

"""Exception hierarchy shared across the package."""


class MultiHedgeError(Exception):
    """Base class for all package errors."""


class ConfigError(MultiHedgeError, ValueError):
    pass


class DataError(MultiHedgeError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OrderingError(DataError):
    pass


class DomainError(MultiHedgeError, ValueError):
    pass


class InsufficientHistoryError(DomainError):
    pass


class UndefinedMetricError(MultiHedgeError, ArithmeticError):
    """A metric has no finite value for the given series (e.g. zero variance)."""


class InternalError(MultiHedgeError, RuntimeError):
    pass

"""Exception types raised across the package."""


class FreerideError(Exception):
    pass


class TiedOptimum(FreerideError, ValueError):
    pass


class BadProbability(FreerideError, ValueError):
    pass


class DimensionMismatch(FreerideError, ValueError):
    pass


class ZeroCount(FreerideError, ValueError):
    pass


class InsufficientVisibility(FreerideError, PermissionError):
    pass


class CoefficientMismatch(FreerideError, ValueError):
    pass


class MissingTable(FreerideError, LookupError):
    pass


class BadGap(FreerideError, ValueError):
    pass


class DegenerateOptimum(FreerideError, ValueError):
    pass


class BadEta(FreerideError, ValueError):
    pass


class SupportMismatch(FreerideError, ValueError):
    pass


class ParseError(FreerideError, ValueError):
    pass


class ValidationError(FreerideError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownSuite(FreerideError, KeyError):
    pass


class ReplicaError(FreerideError, RuntimeError):
    """Wraps a failure inside a block of replicas."""

    def __init__(self, replicas: range, cause: BaseException):
        super().__init__(
            f"replicas {replicas.start}..{replicas.stop - 1} failed: {cause!r}"
        )
        self.replicas = replicas
        self.cause = cause

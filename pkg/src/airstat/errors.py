class AirstatError(Exception):
    """Base class for toolkit errors."""


class ConfigError(AirstatError, ValueError):
    """Bad schema, config or parameter; the run cannot start."""


class DataError(AirstatError, ValueError):
    """The data cannot support the requested computation."""


class InsufficientDataError(DataError):
    def __init__(self, what: str, required: int, got: int):
        super().__init__(f"{what}: need at least {required}, got {got}")
        self.required = required
        self.got = got


class ExpectedCountError(DataError):
    """Chi-square bins whose expected count is below the validity minimum."""

    def __init__(self, violating: list[int], expected: list[float], minimum: float):
        super().__init__(
            f"expected count below {minimum} in bins {violating}; merge bins before testing"
        )
        self.violating = violating
        self.expected = expected
        self.minimum = minimum

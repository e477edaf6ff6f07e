"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DataError and its
subclasses -> 3, NumericError -> 4.
"""


class LpdmiError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LpdmiError):
    """Invalid configuration. Carries every violated constraint at once."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DataError(LpdmiError):
    """Unusable input data (bad labels, empty split, unloadable dataset)."""


class ParseError(DataError):
    """Malformed binary file. `offset` is the byte where parsing failed."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class AllBackgroundError(DataError):
    """Image or sequence contains no foreground pixels."""


class NumericError(LpdmiError):
    """Numeric failure: non-finite values where finite ones are required."""

"""Exception types shared across the package."""


class DistWccError(Exception):
    """Base class for all errors raised by distwcc."""


class ParseError(DistWccError, ValueError):
    """Malformed edge-list or partition input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(DistWccError, ValueError):
    """A configuration knob is out of its valid range."""


class EngineError(DistWccError, RuntimeError):
    """Fatal failure inside the BSP engine."""


class NoConvergenceError(EngineError):
    """The superstep cap was hit before the program halted."""

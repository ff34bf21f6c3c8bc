"""Exception types shared across the library."""


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalError(ArithmeticError):
    """A computation became numerically meaningless (underflow, degenerate variance)."""


class DenoiserError(RuntimeError):
    """A noise predictor failed; carries the step or frame sequence if known."""

    def __init__(self, message, step=None, sequence=None):
        self.step = step
        self.sequence = sequence
        if step is not None:
            message = f"{message} (step {step})"
        if sequence is not None:
            message = f"{message} (frame sequence {sequence})"
        super().__init__(message)


class ContainerError(ValueError):
    """A weight container file is malformed or unsupported."""

"""Exception types shared across the package."""


class QnnsimError(Exception):
    """Base class for package-specific failures."""


class ConfigError(QnnsimError, ValueError):
    """Invalid, unknown, or ill-typed configuration entry."""

    def __init__(self, message, field=None, line=None):
        parts = []
        if field:
            parts.append(f"key {field!r}")
        if line is not None:
            parts.append(f"line {line}")
        if parts:
            message = f"{message} ({', '.join(parts)})"
        super().__init__(message)
        self.field = field
        self.line = line


class DegenerateInputError(QnnsimError, ValueError):
    """Structurally valid input that is numerically degenerate (e.g. zero trace)."""


class DivergenceError(QnnsimError, RuntimeError):
    """Training diverged; `epoch` records where it was declared."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch

"""Exception types shared across the package."""


class DomainEmptyError(ValueError):
    """The constrained domain has no assignments (inconsistent parity system)."""


class EnumerationCapError(ValueError):
    """Exact enumeration refused because the model exceeds the variable cap."""


class ModelFormatError(ValueError):
    """A model file could not be parsed or failed validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid experiment configuration."""

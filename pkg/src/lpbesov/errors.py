"""Exception types shared across the library and the CLI exit-code mapping."""


class ValidationError(ValueError):
    """Bad input: malformed file, dimension mismatch, parameters out of range."""


class NumericalError(RuntimeError):
    """A computation failed numerically (solver breakdown, non-finite symbol)."""

class FormatError(ValueError):
    """Malformed input file."""


class TrainingError(RuntimeError):
    """Training cannot proceed (empty coverage, non-finite values)."""

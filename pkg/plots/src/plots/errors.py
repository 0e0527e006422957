"""Error type raised for malformed or empty benchmark CSVs."""


class InputDataError(ValueError):
    """A results CSV is missing, empty, inconsistent, or off-schema; the
    message names the offending file or column."""

"""Exception types shared across the package.

The CLI maps these onto its stable exit codes: schema/data/config problems
exit with 2, numerical failures during sampling exit with 3.
"""


class SchemaError(ValueError):
    """A CSV file does not provide the columns the schema requires."""


class DataError(ValueError):
    """A CSV row holds a value the model cannot accept."""


class ConfigError(ValueError):
    """A run configuration is internally inconsistent."""


class ChainDivergedError(RuntimeError):
    """A sampling chain produced a non-finite or inconsistent state."""

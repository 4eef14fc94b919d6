"""Exception hierarchy shared by the library and the command line."""


class PunitiveError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(PunitiveError, ValueError):
    """Invalid economy primitives (costs, sensitivity, distribution)."""


class AssumptionError(ModelError):
    """The market potential is too small for a profitable equilibrium."""


class PolicyError(PunitiveError, ValueError):
    """Invalid misreporting matrix or an analysis applied to the wrong class."""


class ConfigError(PunitiveError, ValueError):
    """Malformed configuration file.

    ``line`` is the 1-based line number of the offending entry when known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)

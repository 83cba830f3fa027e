"""Exception hierarchy shared by the library and the command line."""


class SklrError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SklrError, ValueError):
    """Malformed input data or out-of-range arguments (CLI exit code 1)."""


class ModelFormatError(SklrError, ValueError):
    """A model file could not be parsed."""


class ModelVersionError(ModelFormatError):
    """A model file declares a schema version this build cannot read."""


class SolverContractError(SklrError, RuntimeError):
    """An internal solver invariant was violated (CLI exit code 2)."""

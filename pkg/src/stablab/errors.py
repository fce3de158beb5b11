"""Exception hierarchy shared across the package.

The CLI maps these onto its stable exit codes, so raising the right type
matters more than the message text.
"""


class StabLabError(Exception):
    """Base class for all package-specific errors."""


class ParseError(StabLabError):
    """Syntax error in a presentation, word, or config file."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class CertificateError(StabLabError):
    """A normal-closure certificate is malformed or fails verification."""


class BackendMismatchError(StabLabError):
    """Operands belong to different metric-group backends."""


class CapsExceededError(StabLabError):
    """An exact enumeration was requested beyond the configured caps."""


class NumericError(StabLabError):
    """An iterative numeric kernel failed to converge."""


class SearchError(StabLabError):
    """A heuristic search ended without a usable witness.

    ``best`` carries the best candidate found, when one exists.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best

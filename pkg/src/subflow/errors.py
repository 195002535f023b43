"""Exception hierarchy shared by all subflow modules."""


class SubflowError(Exception):
    """Base class for every error raised by subflow."""


class ParseError(SubflowError):
    """Malformed expression source. ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at offset {position}")


class ArityError(SubflowError):
    """Variable index or argument count incompatible with an ambient dimension."""


class DomainError(SubflowError):
    """Evaluation left the domain of a partial primitive (log, sqrt, /, ^).

    ``subexpr`` holds the emitted text of the offending sub-expression.
    """

    def __init__(self, message: str, subexpr: str = ""):
        self.subexpr = subexpr
        if subexpr:
            message = f"{message} in '{subexpr}'"
        super().__init__(message)


class OffSpaceError(SubflowError):
    """A point was required to lie on an embedded space but does not."""

    def __init__(self, message: str, point=None, residual: float | None = None):
        self.point = point
        self.residual = residual
        super().__init__(message)


class SpaceMismatchError(SubflowError):
    """Objects bound to different spaces were combined."""


class InvalidMapError(SubflowError):
    """A smooth map sends a source point off its target space."""


class AtlasAgreementError(SubflowError):
    """An atlas entry does not restrict to the same derivation on the space."""

    def __init__(self, message: str, point=None, disagreement: float | None = None):
        self.point = point
        self.disagreement = disagreement
        super().__init__(message)


class LocalityPreconditionError(SubflowError):
    """Functions handed to a locality check do not agree near the base point."""


class OutOfDomainError(SubflowError):
    """Curve parameter outside the computed maximal domain."""

    def __init__(self, message: str, domain: tuple[float, float]):
        self.domain = domain
        super().__init__(f"{message}; domain is [{domain[0]!r}, {domain[1]!r}]")

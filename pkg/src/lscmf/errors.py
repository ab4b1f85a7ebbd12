"""Exception hierarchy shared by the library and the CLI."""


class LscmfError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LscmfError, ValueError):
    """An argument lies outside the domain of a formula."""


class DegenerateInputError(LscmfError, ValueError):
    """Input carries no information to estimate from (e.g. all zeros)."""


class InputError(LscmfError, ValueError):
    """Input data is malformed (non-finite entries, bad file contents)."""


class LayoutError(LscmfError, ValueError):
    """Base class for inconsistencies between a layout and its matrices."""


class UnknownViewError(LayoutError):
    pass


class MissingMatrixError(LayoutError):
    pass


class DuplicateMatrixError(LayoutError):
    pass


class ShapeMismatchError(LayoutError):
    pass


class DisconnectedLayoutError(LayoutError):
    pass

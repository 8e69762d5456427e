"""Exceptions raised by the simulator"""


class DenormError(Exception):
    """Base class for every error raised by this package"""

    pass


class SchemaError(DenormError):
    """Raised when a data model cannot be sized or looked up"""

    pass


class UnknownModelError(SchemaError):
    """Raised when a model selector matches no model"""

    pass


class AmbiguousSignatureError(UnknownModelError):
    """Raised when a compact signature matches more than one model"""

    def __init__(self, selector: str, candidates: list):
        self.selector = selector
        self.candidates = list(candidates)
        listing = "\n  ".join(self.candidates)
        super().__init__(
            f"Signature '{selector}' is ambiguous, candidates:\n  {listing}"
        )


class RefinementError(DenormError):
    """Raised when a merge or split cannot be applied"""

    pass


class UseCaseError(DenormError):
    """Raised when a use case document is invalid"""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CostModelError(DenormError):
    """Raised when a query cannot be costed on a model"""

    pass

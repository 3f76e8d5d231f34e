"""Shared exception types."""


class ShapeMismatchError(ValueError):
    """An operation received fields whose shapes do not agree."""


class DocumentError(ValueError):
    """A structured document (model, run spec, walk spec, ...) is invalid.

    ``path`` points at the offending location, e.g. "terms[2].mask.builder".
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.message = message
        self.path = path

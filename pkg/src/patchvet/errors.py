class PatchvetError(Exception):
    """Base class for structural errors raised by the package."""


class MboxFramingError(PatchvetError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class StructuralError(PatchvetError):
    """Input data does not have the shape an operation requires."""


class PreconditionError(PatchvetError, ValueError):
    pass


class ConfigError(PatchvetError):
    pass

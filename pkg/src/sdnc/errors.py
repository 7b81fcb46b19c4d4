"""Exception types raised across the package."""


class SdncError(Exception):
    """Base class for all package errors."""


class ShapeError(SdncError, ValueError):
    pass


class EmptyInput(SdncError, ValueError):
    pass


class NonFiniteInput(SdncError, ValueError):
    pass


class EmptyMemory(SdncError):
    """A read was attempted on a memory with no rows."""


class SealedMemory(SdncError):
    """An append was attempted on a sealed (encoder) memory."""


class NonFreshEngine(SdncError):
    pass


class AlreadyLoaded(SdncError):
    pass


class EncoderMemoryMissing(SdncError):
    pass

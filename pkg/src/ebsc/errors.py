"""Exception hierarchy shared by every module of the package."""


class EbscError(Exception):
    """Base class for all errors raised by :mod:`ebsc`."""


class LabelCollision(EbscError, ValueError):
    pass


class UnknownLabel(EbscError, KeyError):
    pass


class BadPermutation(EbscError, ValueError):
    pass


class NotHermitian(EbscError, ValueError):
    pass


class ShapeError(EbscError, ValueError):
    pass


class SchemaError(EbscError, ValueError):
    """Malformed serialized input; the message names the offending field."""


class NotCP(EbscError, ValueError):
    pass


class NotTP(EbscError, ValueError):
    pass


class NotPSD(EbscError, ValueError):
    pass


class NotPOVM(EbscError, ValueError):
    pass


class NotInstrument(EbscError, ValueError):
    pass


class NotCPTNI(EbscError, ValueError):
    pass


class NotProjector(EbscError, ValueError):
    pass


class BadCut(EbscError, ValueError):
    pass


class BadParam(EbscError, ValueError):
    pass


class NotSuperchannel(EbscError, ValueError):
    pass


class RealizationFailed(EbscError, RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual

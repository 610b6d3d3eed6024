"""Exception types shared across the package."""


class GquadError(Exception):
    """Base class for all library errors."""


class NotInvolution(GquadError):
    pass


class NotPermutation(GquadError):
    pass


class Disconnected(GquadError):
    pass


class NotOneFace(GquadError):
    pass


class BadWord(GquadError):
    pass


class RootLabelNonzero(GquadError):
    pass


class EdgeJumpTooLarge(GquadError):
    pass


class MalformedContour(GquadError):
    pass


class Unreachable(GquadError):
    pass


class GenusZero(GquadError):
    pass


class OutOfRange(GquadError):
    pass


class IncompatibleQuadruple(GquadError):
    pass


class NotBipartiteQuadrangulation(GquadError):
    pass


class NonDominantScheme(GquadError):
    pass


class NotIntertwined(GquadError):
    pass


class InvalidOpeningSequence(GquadError):
    pass


class InvalidTriples(GquadError):
    pass


class TooLarge(GquadError):
    pass


class GenusOutOfRange(GquadError):
    pass


class InsufficientSizes(GquadError):
    pass

"""Exception types shared across the engine."""


class GraphError(Exception):
    """Base class for all engine errors."""


class UnknownConcept(GraphError):
    pass


class NonExpandingConcept(GraphError):
    pass


class DanglingReference(GraphError):
    pass


class ArityMismatch(GraphError):
    pass


class InvalidCount(GraphError):
    pass


class WrongKind(GraphError):
    pass


class NonPositive(GraphError):
    pass


class InvalidDescription(GraphError):
    pass


class ReconstructionMismatch(GraphError):
    pass


class UnknownToken(GraphError):
    pass


class UnknownEpisode(GraphError):
    pass


class MalformedTemplate(GraphError):
    pass


class MalformedTerm(GraphError):
    pass


class Overflow(GraphError):
    pass


class IterCountExceeded(GraphError):
    pass


class VersionMismatch(GraphError):
    pass


class CorruptFile(GraphError):
    pass


class IoFailure(GraphError):
    pass


class UnresolvedReference(GraphError):
    pass


class TooLarge(GraphError):
    pass

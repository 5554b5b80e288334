"""Exception hierarchy shared by all modules."""


class LinstrandError(Exception):
    """Base class."""


class FieldMismatch(LinstrandError, TypeError):
    pass


class DimensionMismatch(LinstrandError, ValueError):
    pass


class ConfigError(LinstrandError, ValueError):
    """A point configuration violates its invariants."""


class SizeLimit(LinstrandError):
    """An enumeration would exceed its configured cap."""


class SingularFrame(LinstrandError, ValueError):
    pass


class BadUnit(LinstrandError, ValueError):
    pass


class ZeroQuadric(LinstrandError, ValueError):
    pass


class NotSplit(LinstrandError):
    """The quadric has rank >= 3."""

    def __init__(self, msg, quadric=None):
        super().__init__(msg)
        self.quadric = quadric


class NotSplitOverField(NotSplit):
    """Rank-2 quadric whose factors need a square root outside the field."""


class TheoremViolation(LinstrandError, AssertionError):
    """Data contradicts a proven statement; indicates an upstream bug."""


class NotSquareFree(TheoremViolation):
    pass


class NotInIdeal(TheoremViolation):
    pass


class NotDivisible(TheoremViolation):
    pass


class ContradictionReached(TheoremViolation):
    pass


class PivotInterleaved(LinstrandError, ValueError):
    pass


class HypothesisError(LinstrandError, ValueError):
    """Inputs do not satisfy the hypotheses of a lemma."""


class DimOutOfRange(LinstrandError, ValueError):
    pass


class NoCertificate(LinstrandError):
    pass


class PropagationStalled(LinstrandError):
    pass


class RejectionOverflow(LinstrandError):
    pass


class NotOnRnc(LinstrandError):
    pass

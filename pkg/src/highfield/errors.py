"""Exception types shared across the package.

Every error carries enough context in its message to identify the offending
quantity; callers are expected to catch the specific class, not to parse text.
"""


class HighFieldError(Exception):
    """Base class for all domain errors raised by this package."""


class AssumptionViolated(HighFieldError):
    """A model assumption (profile positivity, exponent window, ...) failed.

    Carries which assumption was violated and the offending value.
    """

    def __init__(self, assumption, value, message=""):
        self.assumption = assumption
        self.value = value
        super().__init__(f"{assumption}: offending value {value!r}. {message}".strip())


class DimensionMismatch(HighFieldError):
    """Operands live on different grids or have inconsistent shapes."""


class TailMissing(HighFieldError):
    """A singular-tail operation was requested on a model without a tail."""


class NoConvergence(HighFieldError):
    """An iterative solver exhausted its budget before reaching tolerance."""


class AmbiguousCluster(HighFieldError):
    """A spectral gap falls inside the undecidable clustering band."""


class SingularShift(HighFieldError):
    """The resolvent was requested at a point too close to the spectrum."""


class GapTooSmall(HighFieldError):
    """The isolating gap around the target eigenvalue is not resolved."""


class DegenerateFirstOrder(HighFieldError):
    """First-order splitting of a degenerate cluster is not simple."""


class TrackingLost(HighFieldError):
    """Eigenvector-overlap continuation dropped below the trust threshold."""


class DefectTooLarge(HighFieldError):
    """An almost projection's defect exceeds the 1/8 admissibility bound."""


class ProjectionsTooFar(HighFieldError):
    """Two projections are at distance >= 1, no intertwiner exists."""


class RankMismatch(HighFieldError):
    """An operation required a projection of a different rank."""


class SupportExceedsGrid(HighFieldError):
    """A momentum amplitude's support does not fit inside the dual grid."""


class ExpansionIncomplete(HighFieldError):
    """The supplied eigenfunction expansion cannot reach the mass target."""


class ParseError(HighFieldError):
    """Scenario configuration text is malformed.

    ``line`` is 1-based; ``key`` names the offending key when known.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")

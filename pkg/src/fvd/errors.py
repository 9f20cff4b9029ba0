"""Exception hierarchy shared by all modules."""


class FvdError(Exception):
    """Base class for all library errors."""


class DegenerateInput(FvdError):
    """Input polygon/sites fail a structural precondition."""


class ChordOutsidePolygon(FvdError):
    pass


class CoincidentPoints(FvdError):
    pass


class PointOutsidePolygon(FvdError):
    pass


class CrossingPairs(FvdError):
    pass


class DegenerateTie(FvdError):
    """More farthest sites tie at a point than general position allows."""

    def __init__(self, msg, point=None, sites=None):
        super().__init__(msg)
        self.point = point
        self.sites = sites or []


class GeneralPositionViolated(FvdError):
    """A vertex has two farthest sites within the tie tolerance."""

    def __init__(self, msg, vertex=None, sites=None):
        super().__init__(msg)
        self.vertex = vertex
        self.sites = sites or []


class DisconnectedRun(FvdError):
    pass


class NoLocus(FvdError):
    """One additively weighted cone dominates the other everywhere."""


class ListOrderViolated(FvdError):
    """Monotone-cell property of a sorted triangle list failed."""


class CurveNotInscribed(FvdError):
    pass


class IterationOverrun(FvdError):
    """Decomposition ran past its iteration bug-trap cap."""


class AdmissibilityViolated(FvdError):
    """Abstract Voronoi cell came out empty or disconnected."""


class GlueMismatch(FvdError):
    """Adjacent diagram parts disagree on a shared boundary label."""


class ResolutionMiss(FvdError):
    """Oracle boundary scan found two breakpoints in one interval."""

"""Exception types raised by the geometry, solver and estimation code."""


class GeometryError(ValueError):
    """Base class for all recoverable geometric failures."""


class NonPositiveDistance(GeometryError):
    pass


class PointAtInfinity(GeometryError):
    pass


class SingularIntrinsics(GeometryError):
    pass


class Degenerate(GeometryError):
    """A solver's linear system does not determine a unique solution."""


class NoRealIntersection(Degenerate):
    pass


class DegenerateCircle(Degenerate):
    """The ellipse collapsed onto the circle: infinitely many intersections."""


class DegenerateConfiguration(GeometryError):
    pass


class ZeroTranslation(GeometryError):
    pass


class ParallelRays(GeometryError):
    pass


class AllCandidatesFail(GeometryError):
    pass


class NoModelFound(GeometryError):
    pass


class ProjectionOutOfFrame(GeometryError):
    pass

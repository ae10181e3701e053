"""Exception hierarchy shared by all modules."""


class ResRadonError(Exception):
    """Base class for every error raised by the package."""


class InputError(ResRadonError, ValueError):
    """Malformed or out-of-contract input."""


class NotHomogeneous(InputError):
    pass


class GeometryError(ResRadonError):
    """A contour, tube or domain does not have the required shape."""


class EmptyCycleError(GeometryError):
    pass


class UnsupportedGeometryError(GeometryError):
    pass


class UnsupportedBasisError(ResRadonError):
    """The algebraic residue oracle cannot handle this generator tuple."""


class NotStabilizedError(ResRadonError):
    """A limit along an admissible schedule (or a quadrature refinement) did not settle."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class BranchPointError(GeometryError):
    """A fiber of the projection degenerates on the integration cycle; perturb the cycle or give up."""


class NearIncidenceError(ResRadonError):
    """The hyperplane is (numerically) in S_V or cuts the integration cycle."""


class SingularPointError(GeometryError):
    pass

"""Exception types shared across the workbench."""


class GeometryError(ValueError):
    """Invalid geometric input (bad height, non-unit vector, singular reference)."""


class DiscretizationError(GeometryError):
    """A discrete field degenerated (e.g. non-positive-definite metric).

    Carries the offending grid node when known.
    """

    def __init__(self, message, node=None):
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)
        self.node = node


class FoliationBreakdown(GeometryError):
    """The equidistant foliation degenerates before the requested distance."""

    def __init__(self, message, node=None, rho_critical=None):
        if node is not None:
            message = f"{message} (node {node}, critical distance {rho_critical})"
        super().__init__(message)
        self.node = node
        self.rho_critical = rho_critical


class TransformSingular(GeometryError):
    """The boundary <-> infinity transform is singular at some node."""

    def __init__(self, message, node=None):
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)
        self.node = node


class PreconditionError(GeometryError):
    """An operation was called on a state that does not satisfy its precondition."""

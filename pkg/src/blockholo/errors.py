"""Exception types shared across the toolkit."""


class BlockHoloError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatchError(BlockHoloError):
    """Two objects carry incompatible block shapes."""


class DimensionLimitError(BlockHoloError):
    """Requested block structure or grid exceeds the configured desk-scale limits."""


class OffGridError(BlockHoloError):
    """A value that must lie on the grid does not."""


class EmptyRegionError(BlockHoloError):
    """Operation requires a nonempty region."""


class PointNotInRegionError(BlockHoloError):
    """Operation requires the query point to lie inside the region."""


class RecipeError(BlockHoloError):
    """Invalid generator parameters or an undeclared/false recipe flag."""


class NotConvexError(BlockHoloError):
    """Operation requires a recipe-declared convex region."""


class PoleInsideProjectionError(BlockHoloError):
    """A declared Laurent pole falls inside the closure of the projection."""


class UnresolvableLeafError(BlockHoloError):
    """A leaf-backed function was evaluated at a point whose leaf node is unknown."""


class ZeroModulusError(BlockHoloError):
    """A log branch was requested at a block value too close to 0."""


class NoSeparatorError(BlockHoloError):
    """No family member separates the point from the compact sample."""


class ResolutionTooFineError(BlockHoloError):
    """Separation ratio so close to 1 that the power search exceeded its cap."""


class ExhaustionStalledError(BlockHoloError):
    """The witness exhaustion loop found no admissible point at grid resolution.

    Carries the number of completed terms in ``stage`` and any partial result
    in ``partial``.
    """

    def __init__(self, message, stage=0, partial=None):
        super().__init__(message)
        self.stage = stage
        self.partial = partial

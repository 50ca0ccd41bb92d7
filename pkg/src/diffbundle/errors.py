class DiffBundleError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(DiffBundleError, ValueError):
    """An operation was called with inputs outside its contract."""


class StencilError(PreconditionError):
    """A finite-difference stencil leaves the declared domain."""


class GroupMismatchError(PreconditionError):
    """Two objects carry different group descriptors."""


class MembershipError(PreconditionError):
    """A point does not belong to the chart or cover set it was used with."""


class ValidationError(DiffBundleError):
    """A structure failed its invariant audit."""


class NotNumerableError(ValidationError):
    """No partition of unity subordinate to the cover could be registered."""


class IncreaseTruncation(DiffBundleError):
    """The multi-index level is too small to cover every base sample."""

"""Exception hierarchy shared by all modules."""


class SelfRepError(Exception):
    """Base class for toolkit errors."""


class InvalidStateError(SelfRepError, ValueError):
    """Input violates the invariants of a state or channel."""


class DimensionMismatchError(SelfRepError, ValueError):
    """Operands have incompatible dimensions or belong to different backends."""


class NumericalError(SelfRepError, RuntimeError):
    """A numerical routine failed to converge or lost accuracy."""

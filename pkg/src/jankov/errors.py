class AlgebraError(ValueError):
    """Base class for input and precondition errors."""


class SignatureMismatch(AlgebraError):
    pass


class DegenerateAlgebra(AlgebraError):
    pass


class NotSubdirectlyIrreducible(AlgebraError):
    pass


class NotHeyting(AlgebraError):
    pass


class CapExceeded(AlgebraError):
    """A construction grew past its declared size cap."""


class BoundUnavailable(AlgebraError):
    """A decision needs a size bound that the variety spec does not provide."""


class BoundExhausted(Exception):
    """A bounded search ended without a verdict."""


class InternalConsistencyError(AssertionError):
    """Two independent computations of the same fact disagree."""

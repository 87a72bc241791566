"""Exception types shared across the package."""


class ProdconcError(Exception):
    """Base class for all package-specific errors."""


class SpaceValidationError(ProdconcError):
    """A product space violates one of its structural invariants."""


class CapExceededError(ProdconcError):
    """An exhaustive enumeration would exceed the configured outcome cap."""


class NotCertifiedError(ProdconcError):
    """A distance solve failed to certify within its iteration budget."""


class DimensionMismatchError(ProdconcError):
    """Vector or coefficient dimensions do not match the target structure."""


class SubspaceValidationError(ProdconcError):
    """A sampled subspace violates one of its structural invariants."""


class RetriesExhaustedError(ProdconcError):
    """No selection trial passed certification within the retry budget."""

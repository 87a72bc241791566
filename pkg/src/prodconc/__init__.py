"""Concentration checks on finite product spaces and L_r subspace sparsification."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .spaces import (
    BlockSpace,
    Event,
    ProductSpace,
    bernoulli_cube,
    enumerate_outcomes,
    event_probability,
    validate_space,
)
from .distance import DistanceCert, convex_distance, min_norm_oracle

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "BlockSpace",
    "Event",
    "ProductSpace",
    "bernoulli_cube",
    "enumerate_outcomes",
    "event_probability",
    "validate_space",
    "DistanceCert",
    "convex_distance",
    "min_norm_oracle",
    "__version__",
]

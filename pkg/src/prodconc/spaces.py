"""Finite product probability spaces.

A space is an ordered list of blocks.  Block i holds a finite set of points
in R^{d_i} with a norm tag (L1, L2 or LINF) and a probability per point; the
block diameter must not exceed one.  Outcomes are tuples of per-block point
indices, and the product measure is the product of the per-block weights.
Blocks are combined with an outer exponent ``outer_p >= 2``.
"""

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, SpaceValidationError

NORM_TAGS = ("L1", "L2", "LINF")
NORM_CODES = {"L1": 0, "L2": 1, "LINF": 2}

DEFAULT_OUTCOME_CAP = 1 << 20

PROB_SUM_TOL = 1e-12


def block_norm(v, tag):
    """Norm of a single block vector under its tag."""
    v = np.asarray(v, dtype=float)
    if tag == "L1":
        return float(np.sum(np.abs(v)))
    if tag == "L2":
        return float(np.sqrt(np.sum(v * v)))
    if tag == "LINF":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unknown norm tag {tag!r}")


@dataclass(frozen=True)
class BlockSpace:
    """One factor of the product: points, a norm tag and point weights."""

    points: np.ndarray  # (k, d)
    norm: str
    probs: np.ndarray  # (k,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float)
        if pts.shape[0] == 0:
            raise SpaceValidationError("block must contain at least one point")
        if self.norm not in NORM_TAGS:
            raise SpaceValidationError(f"unknown norm tag {self.norm!r}")
        if pr.shape != (pts.shape[0],):
            raise SpaceValidationError("one probability per point required")
        pts.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def diameter(self):
        k = self.size
        diam = 0.0
        for a in range(k):
            for b in range(a + 1, k):
                diam = max(diam, block_norm(self.points[a] - self.points[b], self.norm))
        return diam


@dataclass(frozen=True)
class ProductSpace:
    """Ordered product of blocks with the outer combining exponent."""

    blocks: tuple
    outer_p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise SpaceValidationError("space needs at least one block")
        if self.outer_p < 2.0:
            raise SpaceValidationError("outer_p must be >= 2")

    @property
    def n_blocks(self):
        return len(self.blocks)

    def n_outcomes(self):
        count = 1
        for b in self.blocks:
            count *= b.size
        return count

    def total_dim(self):
        return sum(b.dim for b in self.blocks)

    def block_offsets(self):
        """Start offsets of each block in the concatenated coordinate vector."""
        offs = np.zeros(self.n_blocks + 1, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            offs[i + 1] = offs[i] + b.dim
        return offs

    def norm_codes(self):
        return np.array([NORM_CODES[b.norm] for b in self.blocks], dtype=np.int32)

    def with_outer_p(self, p):
        return ProductSpace(self.blocks, outer_p=float(p))


@dataclass(frozen=True)
class Event:
    """Deduplicated, sorted set of outcomes (tuples of point indices)."""

    outcomes: tuple

    def __post_init__(self):
        outs = tuple(sorted({tuple(int(i) for i in o) for o in self.outcomes}))
        object.__setattr__(self, "outcomes", outs)

    def __len__(self):
        return len(self.outcomes)

    def __contains__(self, outcome):
        return tuple(outcome) in set(self.outcomes)


@dataclass(frozen=True)
class SpaceDiagnostics:
    diameters: tuple
    prob_sums: tuple
    outcome_count: int
    violations: tuple

    @property
    def ok(self):
        return not self.violations


def validate_space(space, cap=DEFAULT_OUTCOME_CAP):
    """Check every structural invariant and report all violations found."""
    violations = []
    diameters = []
    prob_sums = []
    for i, b in enumerate(space.blocks):
        d = b.diameter()
        diameters.append(d)
        if d > 1.0 + 1e-12:
            violations.append(f"block {i}: diameter {d:.6g} exceeds 1")
        s = math.fsum(b.probs.tolist())
        prob_sums.append(s)
        if abs(s - 1.0) > PROB_SUM_TOL:
            violations.append(f"block {i}: probabilities sum to {s:.17g}, not 1")
        if np.any(b.probs < 0):
            violations.append(f"block {i}: negative probability")
    count = space.n_outcomes()
    if count > cap:
        violations.append(f"outcome count {count} exceeds cap {cap}")
    return SpaceDiagnostics(tuple(diameters), tuple(prob_sums), count, tuple(violations))


def bernoulli_cube(n, eta):
    """n independent {0,1} blocks with weights (1-eta, eta), L2 norm, p = 2."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    block = BlockSpace(points=np.array([[0.0], [1.0]]), norm="L2",
                       probs=np.array([1.0 - eta, eta]))
    return ProductSpace(blocks=(block,) * int(n), outer_p=2.0)


def enumerate_outcomes(space, cap=DEFAULT_OUTCOME_CAP):
    """Yield every (outcome, weight) in lexicographic order of indices."""
    count = space.n_outcomes()
    if count > cap:
        raise CapExceededError(f"{count} outcomes exceed cap {cap}")
    ranges = [range(b.size) for b in space.blocks]
    probs = [b.probs for b in space.blocks]
    for idx in itertools.product(*ranges):
        w = 1.0
        for p, i in zip(probs, idx):
            w *= p[i]
        yield idx, w


def outcome_weights(space, cap=DEFAULT_OUTCOME_CAP):
    """All product weights as one array, in the same lexicographic order."""
    count = space.n_outcomes()
    if count > cap:
        raise CapExceededError(f"{count} outcomes exceed cap {cap}")
    w = np.array([1.0])
    for b in space.blocks:
        w = np.multiply.outer(w, b.probs).ravel()
    return w


def event_probability(space, event):
    """Product-measure probability of an event."""
    terms = []
    for out in event.outcomes:
        if len(out) != space.n_blocks:
            raise ValueError("outcome length does not match block count")
        w = 1.0
        for b, i in zip(space.blocks, out):
            if not 0 <= i < b.size:
                raise IndexError(f"point index {i} out of range")
            w *= b.probs[i]
        terms.append(w)
    return math.fsum(terms)


def outcome_vector(space, outcome):
    """Concatenated coordinates of an outcome."""
    return np.concatenate([b.points[i] for b, i in zip(space.blocks, outcome)])


def event_matrix(space, event):
    """Rows are the concatenated coordinates of the event's outcomes."""
    return np.ascontiguousarray(
        np.stack([outcome_vector(space, o) for o in event.outcomes]))


# ---------------------------------------------------------------------------
# JSON interchange


def space_to_dict(space):
    return {
        "blocks": [
            {"points": b.points.tolist(), "norm": b.norm, "probs": b.probs.tolist()}
            for b in space.blocks
        ],
        "outer_p": space.outer_p,
    }


def space_from_dict(data):
    blocks = tuple(
        BlockSpace(points=np.array(b["points"], dtype=float), norm=b["norm"],
                   probs=np.array(b["probs"], dtype=float))
        for b in data["blocks"]
    )
    return ProductSpace(blocks=blocks, outer_p=float(data.get("outer_p", 2.0)))


def load_space(path):
    with open(path) as fh:
        return space_from_dict(json.load(fh))


def save_space(space, path):
    with open(path, "w") as fh:
        json.dump(space_to_dict(space), fh, indent=2)


def event_from_lists(lists):
    """Events interchange as lists of index tuples."""
    return Event(outcomes=tuple(tuple(o) for o in lists))

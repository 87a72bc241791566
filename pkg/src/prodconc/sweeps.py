"""Seeded random instances for verification sweeps."""

import numpy as np

from .rng import derive_rng
from .spaces import NORM_TAGS, BlockSpace, Event, ProductSpace, block_norm


def random_block(rng, max_points=3, max_dim=3, tags=NORM_TAGS):
    """Random finite block, rescaled so its diameter is at most one."""
    k = int(rng.integers(2, max_points + 1))
    d = int(rng.integers(1, max_dim + 1))
    tag = str(rng.choice(tags))
    pts = rng.uniform(-1.0, 1.0, size=(k, d))
    diam = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            diam = max(diam, block_norm(pts[a] - pts[b], tag))
    if diam > 0:
        pts = pts / max(diam, 1.0)
    probs = rng.uniform(0.05, 1.0, size=k)
    probs = probs / probs.sum()
    return BlockSpace(points=pts, norm=tag, probs=probs)


def random_space(rng, min_blocks=2, max_blocks=6, max_points=3, max_dim=3,
                 tags=NORM_TAGS, outer_p=2.0):
    n = int(rng.integers(min_blocks, max_blocks + 1))
    blocks = tuple(random_block(rng, max_points, max_dim, tags) for _ in range(n))
    return ProductSpace(blocks=blocks, outer_p=outer_p)


def random_event(rng, space, include_prob=0.5):
    """Each outcome joins independently; redrawn until nonempty."""
    count = space.n_outcomes()
    sizes = [b.size for b in space.blocks]
    while True:
        mask = rng.random(count) < include_prob
        if mask.any():
            break
    outcomes = []
    for flat in np.flatnonzero(mask):
        idx = []
        rem = int(flat)
        for s in reversed(sizes):
            idx.append(rem % s)
            rem //= s
        outcomes.append(tuple(reversed(idx)))
    return Event(outcomes=tuple(outcomes))


def random_pairs(seed, count, **space_kwargs):
    """Seeded (space, event) pairs for Theorem-1 style sweeps."""
    pairs = []
    for i in range(count):
        rng = derive_rng(seed, "sweep-pair", i)
        space = random_space(rng, **space_kwargs)
        event = random_event(rng, space)
        pairs.append((space, event))
    return pairs

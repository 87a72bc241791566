import numpy as np
import pytest

from prodconc.distance import (
    convex_distance,
    hull_distance,
    min_norm_oracle,
    recompute_upper,
)
from prodconc.rng import derive_rng
from prodconc.spaces import BlockSpace, Event, ProductSpace
from prodconc.sweeps import random_event, random_space


def segment_space(norm="L2"):
    b1 = BlockSpace(points=np.array([[0.0], [1.0]]), norm=norm,
                    probs=np.array([0.5, 0.5]))
    b2 = BlockSpace(points=np.array([[0.0], [1.0]]), norm=norm,
                    probs=np.array([0.5, 0.5]))
    return ProductSpace(blocks=(b1, b2), outer_p=2.0)


def test_member_distance_zero():
    space = segment_space()
    event = Event(outcomes=((0, 0), (1, 1)))
    cert = convex_distance(space, event, (0, 0))
    assert cert.upper == 0.0
    assert cert.lower == 0.0
    assert cert.certified


def test_single_point_event_is_plain_norm():
    # distance to a one-point hull is the mixed norm of the difference
    space = segment_space()
    event = Event(outcomes=((1, 1),))
    cert = convex_distance(space, event, (0, 0))
    assert cert.upper == pytest.approx(np.sqrt(2.0), abs=1e-8)
    assert cert.certified


def test_hamming_cube_midpoint():
    # t = (0,0), hull of {(0,1),(1,0)}: nearest point is the midpoint,
    # distance sqrt(1/4 + 1/4) = sqrt(1/2)
    space = segment_space()
    event = Event(outcomes=((0, 1), (1, 0)))
    cert = convex_distance(space, event, (0, 0))
    assert cert.upper == pytest.approx(np.sqrt(0.5), abs=1e-8)
    assert cert.certified


def test_l1_block_distance():
    b = BlockSpace(points=np.array([[0.0, 0.0], [1.0, 1.0]]), norm="L1",
                   probs=np.array([0.5, 0.5]))
    space = ProductSpace(blocks=(b,), outer_p=2.0)
    event = Event(outcomes=((1,),))
    cert = convex_distance(space, event, (0,))
    assert cert.upper == pytest.approx(2.0, abs=1e-7)
    assert cert.certified


def test_certificate_brackets_and_recomputes():
    for i in range(40):
        rng = derive_rng(777, "dist-cert", i)
        space = random_space(rng, min_blocks=2, max_blocks=4)
        event = random_event(rng, space)
        t = tuple(int(rng.integers(b.size)) for b in space.blocks)
        cert = convex_distance(space, event, t, tol=1e-7)
        assert 0.0 <= cert.lower <= cert.upper
        # the upper bound is exactly reproducible from the coefficients
        assert abs(recompute_upper(space, event, t, cert) - cert.upper) <= 1e-10
        lam = cert.coefficients
        assert lam.min() >= -1e-12
        assert lam.sum() == pytest.approx(1.0, abs=1e-9)


def test_matches_grid_oracle_on_small_hulls():
    checked = 0
    for i in range(60):
        rng = derive_rng(31415, "dist-oracle", i)
        space = random_space(rng, min_blocks=2, max_blocks=3, max_points=2,
                             max_dim=2)
        event = random_event(rng, space)
        if len(event) > 3:
            continue
        t = tuple(int(rng.integers(b.size)) for b in space.blocks)
        cert = convex_distance(space, event, t, tol=1e-8)
        oracle = min_norm_oracle(space, event, t, grid_resolution=200)
        # the grid value is an upper bound with O(1/resolution) excess
        assert cert.upper <= oracle + 1e-8
        assert oracle - cert.upper <= 2e-2
        checked += 1
    assert checked >= 20


def test_exponent_monotonicity():
    # blocks have diameter <= 1, so phi_p^p <= phi_2^2 pointwise
    for i in range(15):
        rng = derive_rng(999, "dist-exponent", i)
        space = random_space(rng, min_blocks=2, max_blocks=3)
        event = random_event(rng, space)
        t = tuple(int(rng.integers(b.size)) for b in space.blocks)
        tol = 1e-6
        u2 = convex_distance(space, event, t, tol=tol).upper
        for p in (3.0, 4.0):
            up = convex_distance(space.with_outer_p(p), event, t, tol=tol).upper
            assert up ** p <= u2 ** 2 + 3 * tol


def test_rejects_empty_event():
    space = segment_space()
    with pytest.raises(ValueError):
        convex_distance(space, Event(outcomes=()), (0, 0))


def test_hull_distance_validates_inputs():
    with pytest.raises(ValueError):
        hull_distance(np.zeros((0, 2)), np.zeros(2),
                      np.array([0, 2]), np.array([1], dtype=np.int32), 2.0)
    with pytest.raises(ValueError):
        hull_distance(np.zeros((1, 2)), np.ones(2),
                      np.array([0, 2]), np.array([1], dtype=np.int32), 2.0,
                      tol=0.0)

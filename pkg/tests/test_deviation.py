import math

import numpy as np
import pytest

from prodconc.deviation import (
    DistanceToPointFn,
    LinearFn,
    MaxAffineFn,
    evaluate_fn,
    exact_center,
    lipschitz_p,
    tail_vs_bound,
    validate_fn,
)
from prodconc.errors import DimensionMismatchError
from prodconc.spaces import BlockSpace, ProductSpace, bernoulli_cube


def cube_coeffs(n, value=1.0):
    return tuple([value] for _ in range(n))


def test_linear_lipschitz_closed_form():
    # on the cube with L2 blocks and p = 2, sigma is the Euclidean norm of
    # the per-block coefficients
    space = bernoulli_cube(4, 0.5)
    fn = LinearFn(coeffs=([1.0], [2.0], [2.0], [4.0]))
    assert lipschitz_p(fn, space) == pytest.approx(5.0, abs=1e-12)


def test_linear_lipschitz_dual_norms():
    # an L1 block contributes the sup norm of its coefficients
    b_l1 = BlockSpace(points=np.array([[0.0, 0.0], [0.5, 0.5]]), norm="L1",
                      probs=np.array([0.5, 0.5]))
    b_linf = BlockSpace(points=np.array([[0.0, 0.0], [0.5, 0.5]]), norm="LINF",
                        probs=np.array([0.5, 0.5]))
    space = ProductSpace(blocks=(b_l1, b_linf), outer_p=2.0)
    fn = LinearFn(coeffs=([3.0, 4.0], [3.0, 4.0]))
    # dual of L1 is LINF (-> 4), dual of LINF is L1 (-> 7)
    assert lipschitz_p(fn, space) == pytest.approx(math.hypot(4.0, 7.0),
                                                   abs=1e-12)


def test_distance_fn_is_one_lipschitz():
    space = bernoulli_cube(3, 0.5)
    fn = DistanceToPointFn(reference=([0.0], [1.0], [0.5]))
    assert lipschitz_p(fn, space) == 1.0


def test_max_affine_lipschitz_is_max_over_pieces():
    space = bernoulli_cube(2, 0.5)
    fn = MaxAffineFn(pieces=(
        (([1.0], [0.0]), 0.0),
        (([3.0], [4.0]), -1.0),
    ))
    assert lipschitz_p(fn, space) == pytest.approx(5.0, abs=1e-12)


def test_validate_rejects_dimension_mismatch():
    space = bernoulli_cube(3, 0.5)
    with pytest.raises(DimensionMismatchError):
        validate_fn(LinearFn(coeffs=([1.0], [1.0])), space)
    with pytest.raises(ValueError):
        # reference outside the hull bounding box
        validate_fn(DistanceToPointFn(reference=([0.0], [0.0], [2.0])), space)


def test_evaluate_fn_values():
    space = bernoulli_cube(2, 0.5)
    vec = np.array([1.0, 0.0])
    assert evaluate_fn(LinearFn(coeffs=([2.0], [3.0])), space, vec) == 2.0
    d = evaluate_fn(DistanceToPointFn(reference=([0.0], [1.0])), space, vec)
    assert d == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_exact_center_on_bernoulli_sum():
    # f = sum of 4 fair coin coordinates: mean 2, lower median 2
    space = bernoulli_cube(4, 0.5)
    fn = LinearFn(coeffs=cube_coeffs(4))
    median, mean = exact_center(space, fn)
    assert mean == pytest.approx(2.0, abs=1e-12)
    assert median == 2.0


def test_exact_center_lower_median():
    # n = 2 fair coins, f = sum: P(f <= 1) = 0.75, P(f >= 1) = 0.75
    space = bernoulli_cube(2, 0.5)
    fn = LinearFn(coeffs=cube_coeffs(2))
    median, mean = exact_center(space, fn)
    assert median == 1.0
    assert mean == pytest.approx(1.0, abs=1e-12)


def test_tail_exact_enumeration_binomial():
    # deviations of the coin-sum from its median follow the binomial law
    space = bernoulli_cube(6, 0.5)
    fn = LinearFn(coeffs=cube_coeffs(6))
    rep = tail_vs_bound(space, fn, [0.5, 1.5, 2.5], center_kind="median")
    # median is 3; P(|S-3| > 0.5) = 1 - C(6,3)/64 = 1 - 20/64
    assert rep.tails[0] == pytest.approx(1.0 - 20.0 / 64.0, abs=1e-12)
    # P(|S-3| > 1.5) = 2*(6+1)/64
    assert rep.tails[1] == pytest.approx(14.0 / 64.0, abs=1e-12)
    # P(|S-3| > 2.5) = 2/64
    assert rep.tails[2] == pytest.approx(2.0 / 64.0, abs=1e-12)
    assert rep.passed


def test_bound_formula_values():
    space = bernoulli_cube(2, 0.5)
    fn = LinearFn(coeffs=cube_coeffs(2))
    rep = tail_vs_bound(space, fn, [math.sqrt(2.0)], center_kind="median")
    # sigma = sqrt(2), so the bound at c = sigma is 4 e^{-1/4}
    assert rep.sigma_p == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert rep.bounds[0] == pytest.approx(3.1152031322856195, abs=1e-12)
    rep = tail_vs_bound(space, fn, [math.sqrt(2.0)], center_kind="mean")
    # mean bound at c = sigma is 8 e^{-1/32}
    assert rep.bounds[0] == pytest.approx(7.7538658758107527, abs=1e-12)


def test_monte_carlo_matches_enumeration():
    space = bernoulli_cube(8, 0.3)
    fn = LinearFn(coeffs=cube_coeffs(8))
    exact = tail_vs_bound(space, fn, [0.5, 1.5, 2.5])
    mc = tail_vs_bound(space, fn, [0.5, 1.5, 2.5], mc_trials=40_000, seed=17)
    for e, m in zip(exact.tails, mc.tails):
        se = math.sqrt(max(e * (1 - e), 1e-12) / 40_000)
        assert abs(e - m) <= 4 * se
    assert mc.passed


def test_monte_carlo_is_seed_deterministic():
    space = bernoulli_cube(6, 0.4)
    fn = LinearFn(coeffs=cube_coeffs(6))
    a = tail_vs_bound(space, fn, [1.0], mc_trials=10_000, seed=5)
    b = tail_vs_bound(space, fn, [1.0], mc_trials=10_000, seed=5)
    assert a.tails == b.tails


def test_c_grid_validation():
    space = bernoulli_cube(2, 0.5)
    fn = LinearFn(coeffs=cube_coeffs(2))
    with pytest.raises(ValueError):
        tail_vs_bound(space, fn, [])
    with pytest.raises(ValueError):
        tail_vs_bound(space, fn, [2.0, 1.0])
    with pytest.raises(ValueError):
        tail_vs_bound(space, fn, [1.0], center_kind="mode")

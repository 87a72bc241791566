"""Deviation of convex Lipschitz functions around their median or mean.

Built-in function families (linear, distance-to-point, max-affine) come with
closed-form Lipschitz constants sigma_p with respect to the mixed p-norm, so
the tail bounds
    P(|f - M_f| > c) <= 4 e^{-c^p / (4 sigma_p^p)}       (median)
    P(|f - E f| > c) <= K e^{-delta c^p / sigma_p^p}     (mean, K=8, delta=1/32)
are checked soundly against exact enumeration or seeded sampling.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .rng import derive_rng
from .spaces import block_norm, enumerate_outcomes, outcome_vector

MEAN_K = 8.0
MEAN_DELTA = 1.0 / 32.0

_DUAL_TAG = {"L1": "LINF", "L2": "L2", "LINF": "L1"}


@dataclass(frozen=True)
class LinearFn:
    """f(t) = sum_i <c_i, t_i> with one coefficient vector per block."""

    coeffs: tuple


@dataclass(frozen=True)
class DistanceToPointFn:
    """f(t) = (sum_i ||t_i - z_i||_i^p)^{1/p}; 1-Lipschitz by construction."""

    reference: tuple


@dataclass(frozen=True)
class MaxAffineFn:
    """f(t) = max_k (sum_i <c_i^k, t_i> + b_k)."""

    pieces: tuple  # of (coeffs tuple, offset)


def _check_blocks(coeffs, space):
    if len(coeffs) != len(space.blocks):
        raise DimensionMismatchError("one coefficient vector per block required")
    for c, blk in zip(coeffs, space.blocks):
        if len(np.atleast_1d(c)) != blk.dim:
            raise DimensionMismatchError(
                f"coefficient dim {len(np.atleast_1d(c))} != block dim {blk.dim}")


def validate_fn(fn, space):
    if isinstance(fn, LinearFn):
        _check_blocks(fn.coeffs, space)
    elif isinstance(fn, MaxAffineFn):
        for coeffs, _b in fn.pieces:
            _check_blocks(coeffs, space)
    elif isinstance(fn, DistanceToPointFn):
        if len(fn.reference) != len(space.blocks):
            raise DimensionMismatchError("reference needs one point per block")
        offs = space.block_offsets()
        for z, blk in zip(fn.reference, space.blocks):
            z = np.atleast_1d(np.asarray(z, dtype=float))
            if z.shape[0] != blk.dim:
                raise DimensionMismatchError("reference dim mismatch")
            lohi = (blk.points.min(axis=0), blk.points.max(axis=0))
            if np.any(z < lohi[0] - 1e-12) or np.any(z > lohi[1] + 1e-12):
                raise ValueError("reference point outside the hull bounding box")
    else:
        raise TypeError(f"unknown function spec {type(fn).__name__}")


def evaluate_fn(fn, space, vec):
    """Value of a built-in function at a flattened outcome vector."""
    offs = space.block_offsets()
    if isinstance(fn, LinearFn):
        flat = np.concatenate([np.atleast_1d(np.asarray(c, dtype=float))
                               for c in fn.coeffs])
        return float(vec @ flat)
    if isinstance(fn, MaxAffineFn):
        best = -math.inf
        for coeffs, b in fn.pieces:
            flat = np.concatenate([np.atleast_1d(np.asarray(c, dtype=float))
                                   for c in coeffs])
            best = max(best, float(vec @ flat) + b)
        return best
    if isinstance(fn, DistanceToPointFn):
        p = space.outer_p
        total = 0.0
        for b, blk in enumerate(space.blocks):
            z = np.atleast_1d(np.asarray(fn.reference[b], dtype=float))
            total += block_norm(vec[offs[b]:offs[b + 1]] - z, blk.norm) ** p
        return total ** (1.0 / p)
    raise TypeError(f"unknown function spec {type(fn).__name__}")


def _evaluate_matrix(fn, space, V):
    """Vectorized values over rows of outcome-vector matrix V."""
    offs = space.block_offsets()
    if isinstance(fn, LinearFn):
        flat = np.concatenate([np.atleast_1d(np.asarray(c, dtype=float))
                               for c in fn.coeffs])
        return V @ flat
    if isinstance(fn, MaxAffineFn):
        cols = []
        for coeffs, b in fn.pieces:
            flat = np.concatenate([np.atleast_1d(np.asarray(c, dtype=float))
                                   for c in coeffs])
            cols.append(V @ flat + b)
        return np.max(np.stack(cols, axis=1), axis=1)
    if isinstance(fn, DistanceToPointFn):
        p = space.outer_p
        total = np.zeros(V.shape[0])
        for b, blk in enumerate(space.blocks):
            z = np.atleast_1d(np.asarray(fn.reference[b], dtype=float))
            R = V[:, offs[b]:offs[b + 1]] - z[None, :]
            if blk.norm == "L1":
                nrm = np.sum(np.abs(R), axis=1)
            elif blk.norm == "L2":
                nrm = np.sqrt(np.sum(R * R, axis=1))
            else:
                nrm = np.max(np.abs(R), axis=1)
            total += nrm ** p
        return total ** (1.0 / p)
    raise TypeError(f"unknown function spec {type(fn).__name__}")


def lipschitz_p(fn, space):
    """Exact Lipschitz constant w.r.t. the mixed p-norm on the whole space.

    Linear: the l_{p*} norm (p* dual to outer_p) of per-block dual norms of
    the coefficients.  Distance-to-point: 1.  Max-affine: max over pieces.
    """
    validate_fn(fn, space)
    if isinstance(fn, DistanceToPointFn):
        return 1.0
    if isinstance(fn, MaxAffineFn):
        return max(lipschitz_p(LinearFn(coeffs=coeffs), space)
                   for coeffs, _b in fn.pieces)
    p = space.outer_p
    duals = []
    for c, blk in zip(fn.coeffs, space.blocks):
        duals.append(block_norm(np.atleast_1d(np.asarray(c, dtype=float)),
                                _DUAL_TAG[blk.norm]))
    duals = np.asarray(duals)
    if p == 1.0:
        return float(np.max(duals))
    p_star = p / (p - 1.0)
    return float(np.sum(duals ** p_star) ** (1.0 / p_star))


def _enumerated_values(space, fn):
    vals = []
    weights = []
    for outcome, w in enumerate_outcomes(space):
        vals.append(evaluate_fn(fn, space, outcome_vector(space, outcome)))
        weights.append(w)
    return np.asarray(vals), np.asarray(weights)


def exact_center(space, fn):
    """(lower median, mean) by exact enumeration."""
    validate_fn(fn, space)
    vals, weights = _enumerated_values(space, fn)
    mean = float(np.dot(vals, weights))
    order = np.argsort(vals, kind="stable")
    v_sorted = vals[order]
    w_sorted = weights[order]
    cum = np.cumsum(w_sorted)
    total = cum[-1]
    # lower median: smallest attained m with P(f <= m) >= 1/2 and
    # P(f >= m) >= 1/2
    for i in range(len(v_sorted)):
        le = cum[i]
        ge = total - (cum[i - 1] if i > 0 else 0.0)
        # extend over ties
        j = i
        while j + 1 < len(v_sorted) and v_sorted[j + 1] == v_sorted[i]:
            j += 1
        le = cum[j]
        if le >= 0.5 - 1e-15 and ge >= 0.5 - 1e-15:
            return float(v_sorted[i]), mean
    return float(v_sorted[-1]), mean


@dataclass(frozen=True)
class DeviationReport:
    sigma_p: float
    median: float
    mean: float
    center_kind: str
    center: float
    c_grid: tuple
    tails: tuple
    bounds: tuple
    violated: tuple
    mc_trials: int
    seed: int
    passed: bool
    constants: dict = field(default_factory=dict)


def _sample_outcome_vectors(space, rng, count):
    V = np.zeros((count, space.total_dim()))
    offs = space.block_offsets()
    for b, blk in enumerate(space.blocks):
        idx = rng.choice(blk.size, size=count, p=blk.probs)
        V[:, offs[b]:offs[b + 1]] = blk.points[idx]
    return V


def tail_vs_bound(space, fn, c_grid, center_kind="median", mc_trials=0,
                  seed=0, mean_K=MEAN_K, mean_delta=MEAN_DELTA):
    """Tail probabilities against the concentration bound on a c-grid.

    mc_trials = 0 enumerates exactly; otherwise seeded sampling is used and
    the violation check allows a 3*sqrt(tail/trials) Monte Carlo margin.
    """
    validate_fn(fn, space)
    c_grid = [float(c) for c in c_grid]
    if not c_grid:
        raise ValueError("c_grid must be nonempty")
    if any(c <= 0 for c in c_grid) or sorted(c_grid) != c_grid:
        raise ValueError("c_grid must be positive ascending")
    if center_kind not in ("median", "mean"):
        raise ValueError("center_kind must be 'median' or 'mean'")

    sigma = lipschitz_p(fn, space)
    median, mean = exact_center(space, fn)
    center = median if center_kind == "median" else mean
    p = space.outer_p

    cs = np.asarray(c_grid)
    if center_kind == "median":
        bounds = 4.0 * np.exp(-cs ** p / (4.0 * sigma ** p))
    else:
        bounds = mean_K * np.exp(-mean_delta * cs ** p / sigma ** p)

    if mc_trials == 0:
        vals, weights = _enumerated_values(space, fn)
        dev = np.abs(vals - center)
        tails = np.array([float(weights[dev > c].sum()) for c in cs])
        allowance = np.zeros_like(tails)
    else:
        chunk = 8192
        exceed = np.zeros(len(cs), dtype=np.int64)
        done = 0
        ci = 0
        while done < mc_trials:
            n = min(chunk, mc_trials - done)
            rng = derive_rng(seed, "deviation-mc", ci)
            V = _sample_outcome_vectors(space, rng, n)
            dev = np.abs(_evaluate_matrix(fn, space, V) - center)
            for k, c in enumerate(cs):
                exceed[k] += int(np.count_nonzero(dev > c))
            done += n
            ci += 1
        tails = exceed / mc_trials
        allowance = 3.0 * np.sqrt(tails / mc_trials)

    violated = tuple(bool(t - a > b) for t, a, b in zip(tails, allowance, bounds))
    return DeviationReport(
        sigma_p=sigma, median=median, mean=mean, center_kind=center_kind,
        center=center, c_grid=tuple(cs.tolist()), tails=tuple(tails.tolist()),
        bounds=tuple(bounds.tolist()), violated=violated,
        mc_trials=int(mc_trials), seed=int(seed),
        passed=not any(violated),
        constants={"mean_K": mean_K, "mean_delta": mean_delta})

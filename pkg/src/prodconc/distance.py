"""Certified distance to the convex hull of an event.

phi_{A,p}(t) = inf over s in conv A of (sum_i ||t_i - s_i||_i^p)^(1/p).
The solve runs over hull coefficients (one per event outcome) with away-step
conditional gradient; the linearization gap yields a sound lower bound, so
the returned certificate brackets the true distance.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ._kernels import BACKEND, solve_simplex_fw, solve_simplex_fw_smoothed
from .spaces import event_matrix, outcome_vector

DEFAULT_TOL = 1e-8


def default_max_iter(m):
    return 50 * m + 10000


@dataclass(frozen=True)
class DistanceCert:
    """Bracketed hull distance with the feasible coefficients that attain it.

    ``upper`` is recomputable from ``coefficients``: it is the mixed-norm
    distance from t to the convex combination they define.  ``lower`` comes
    from the final linearization gap.  ``certified`` is False when the gap
    stalled above the requested tolerance (possible for the nonsmooth L1 and
    LINF block norms).
    """

    upper: float
    lower: float
    coefficients: np.ndarray
    certified: bool
    iterations: int

    @property
    def gap(self):
        return self.upper - self.lower


def hull_distance(S, t_vec, offsets, codes, p, tol=DEFAULT_TOL, max_iter=None):
    """Matrix-level solve: rows of S are the hull vertices."""
    S = np.ascontiguousarray(S, dtype=float)
    t_vec = np.ascontiguousarray(t_vec, dtype=float)
    if S.shape[0] == 0:
        raise ValueError("hull needs at least one vertex")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = default_max_iter(S.shape[0])

    # exact-membership fast path
    hit = np.flatnonzero(np.all(S == t_vec, axis=1))
    if hit.size:
        lam = np.zeros(S.shape[0])
        lam[hit[0]] = 1.0
        return DistanceCert(0.0, 0.0, lam, True, 0)

    offsets = np.asarray(offsets, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int32)
    # plain subgradient steps can stall short of the optimum on L1/LINF
    # blocks; those instances go through the smoothed continuation kernel
    if np.all(codes == 1):
        solver = solve_simplex_fw
    else:
        solver = solve_simplex_fw_smoothed
    lam, g_up, g_lo, iters = solver(
        S, t_vec, offsets, codes, float(p), float(tol), int(max_iter))
    upper = g_up ** (1.0 / p)
    lower = max(g_lo, 0.0) ** (1.0 / p) if np.isfinite(g_lo) else 0.0
    lower = min(lower, upper)
    if upper - lower > tol:
        # gap stalled: close it with cutting planes on phi itself,
        # keeping the block norms exact inside the LP
        phi_lb, phi_ub, lam_b = _bundle_polish(S, t_vec, offsets, codes, p,
                                               lam, tol)
        if phi_ub < upper:
            lam, upper = lam_b, phi_ub
        lower = min(max(lower, max(phi_lb, 0.0)), upper)
    if upper - lower > tol and lower < tol:
        # possibly a hull member: project by LP and recompute exactly
        lam_m = _membership_coefficients(S, t_vec)
        if lam_m is not None:
            u_m = _mixed_power(t_vec - S.T @ lam_m, offsets, codes, p) ** (1.0 / p)
            if u_m < upper:
                lam, upper = lam_m, u_m
    if upper < tol:
        lower = 0.0
    certified = upper - lower <= tol
    return DistanceCert(upper, lower, lam, certified, iters)


def _membership_coefficients(S, t_vec):
    """Simplex coefficients minimizing the sup-norm residual of S^T lam = t.

    Only used to improve the upper bound (the true mixed norm is recomputed
    at the returned point), so LP tolerances cannot hurt soundness.
    """
    from scipy.optimize import linprog

    m, D = S.shape
    # variables: lam(m), e; minimize e with +/-((S^T lam)_j - t_j) <= e
    c = np.zeros(m + 1)
    c[m] = 1.0
    A_ub = np.zeros((2 * D, m + 1))
    b_ub = np.zeros(2 * D)
    A_ub[:D, :m] = S.T
    A_ub[:D, m] = -1.0
    b_ub[:D] = t_vec
    A_ub[D:, :m] = -S.T
    A_ub[D:, m] = -1.0
    b_ub[D:] = -t_vec
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * m + [(0, None)], method="highs")
    if res.status != 0:
        return None
    lam = np.clip(res.x[:m], 0.0, None)
    return lam / lam.sum()


def _block_norms(r, offsets, codes):
    out = []
    for b in range(len(codes)):
        v = r[offsets[b]:offsets[b + 1]]
        if codes[b] == 0:
            out.append(float(np.sum(np.abs(v))))
        elif codes[b] == 1:
            out.append(float(np.sqrt(np.sum(v * v))))
        else:
            out.append(float(np.max(np.abs(v))) if v.size else 0.0)
    return out


def _bundle_polish(S, t_vec, offsets, codes, p, lam0, tol, max_cuts=60):
    """Cutting-plane bracket of the hull distance phi itself.

    phi(x) = ||(n_1(x),...,n_B(x))||_p is positively homogeneous in the
    block-norm profile, so by Holder phi >= sum_b w_b*n_b(x) for any w with
    ||w||_{p*} <= 1, with equality along the ray of the current profile.
    Cuts use w_b = (nh_b/Nh)^{p-1}; the L1/LINF block norms stay exact inside
    the LP via epigraph variables and L2 norms enter through their dual-norm
    linear minorant, so the LP optimum is a sound lower bound on phi over the
    hull (exactly tight in the limit, by minimax duality).  Iterates are
    feasible, so their true phi values tighten the upper bound.

    Returns (phi_lower, phi_upper, coefficients).
    """
    from scipy.optimize import linprog

    m = S.shape[0]
    n_blocks = len(codes)
    # variable layout: z, lam(m), then one epigraph var per L1 coordinate
    # and one per LINF block
    aux_of = {}
    ai = 1 + m
    for b in range(n_blocks):
        lo, hi = int(offsets[b]), int(offsets[b + 1])
        if codes[b] == 0:
            aux_of[b] = list(range(ai, ai + hi - lo))
            ai += hi - lo
        elif codes[b] == 2:
            aux_of[b] = [ai]
            ai += 1
    nv = ai

    # shared absolute-value rows: aux >= +/-(t_j - (S^T lam)_j)
    rows, rhs = [], []
    for b in range(n_blocks):
        lo, hi = int(offsets[b]), int(offsets[b + 1])
        if codes[b] == 1:
            continue
        for k, j in enumerate(range(lo, hi)):
            a = aux_of[b][k] if codes[b] == 0 else aux_of[b][0]
            row = np.zeros(nv)
            row[1:1 + m] = -S[:, j]
            row[a] = -1.0
            rows.append(row)
            rhs.append(-t_vec[j])
            row = np.zeros(nv)
            row[1:1 + m] = S[:, j]
            row[a] = -1.0
            rows.append(row)
            rhs.append(t_vec[j])

    A_eq = np.zeros((1, nv))
    A_eq[0, 1:1 + m] = 1.0
    bounds = [(None, None)] + [(0, None)] * m + [(None, None)] * (nv - 1 - m)
    c = np.zeros(nv)
    c[0] = 1.0

    cut_rows, cut_rhs = [], []
    lam = np.asarray(lam0, dtype=float).copy()
    best_lb, best_ub, best_lam = 0.0, np.inf, lam.copy()
    for _ in range(max_cuts):
        r = t_vec - S.T @ lam
        ns = _block_norms(r, offsets, codes)
        phi_here = sum(n ** p for n in ns) ** (1.0 / p)
        if phi_here < best_ub:
            best_ub, best_lam = phi_here, lam.copy()
        if phi_here == 0.0:
            break
        # cut: z >= sum_b w_b*n_b(x), w the outer-norm dual at this profile
        row = np.zeros(nv)
        row[0] = -1.0
        lin_off = 0.0
        for b in range(n_blocks):
            w = (ns[b] / phi_here) ** (p - 1.0)
            if w == 0.0:
                continue
            lo, hi = int(offsets[b]), int(offsets[b + 1])
            if codes[b] == 1:
                dhat = r[lo:hi] / ns[b]
                row[1:1 + m] += -w * (S[:, lo:hi] @ dhat)
                lin_off += w * float(dhat @ t_vec[lo:hi])
            else:
                for a in aux_of[b]:
                    row[a] = w
        cut_rows.append(row)
        cut_rhs.append(-lin_off)
        res = linprog(c, A_ub=np.vstack(rows + cut_rows),
                      b_ub=np.array(rhs + cut_rhs), A_eq=A_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        if res.status != 0:
            break
        best_lb = max(best_lb, float(res.fun))
        lam = np.clip(res.x[1:1 + m], 0.0, None)
        lam /= lam.sum()
        if best_ub - best_lb <= tol:
            break
    return best_lb, best_ub, best_lam


def _mixed_power(r, offsets, codes, p):
    total = 0.0
    for b in range(len(codes)):
        v = r[offsets[b]:offsets[b + 1]]
        if codes[b] == 0:
            nrm = np.sum(np.abs(v))
        elif codes[b] == 1:
            nrm = np.sqrt(np.sum(v * v))
        else:
            nrm = np.max(np.abs(v)) if v.size else 0.0
        total += nrm ** p
    return float(total)


def convex_distance(space, event, t, tol=DEFAULT_TOL, max_iter=None):
    """Certified phi_{A,p}(t) for an outcome t of the space."""
    if len(event) == 0:
        raise ValueError("event must be nonempty")
    S = event_matrix(space, event)
    t_vec = outcome_vector(space, t)
    return hull_distance(S, t_vec, space.block_offsets(), space.norm_codes(),
                         space.outer_p, tol=tol, max_iter=max_iter)


def recompute_upper(space, event, t, cert):
    """Mixed-norm distance from t to the combination in the certificate."""
    S = event_matrix(space, event)
    x = S.T @ cert.coefficients
    r = outcome_vector(space, t) - x
    offs = space.block_offsets()
    total = 0.0
    for b, blk in enumerate(space.blocks):
        v = r[offs[b]:offs[b + 1]]
        if blk.norm == "L1":
            nrm = np.sum(np.abs(v))
        elif blk.norm == "L2":
            nrm = np.sqrt(np.sum(v * v))
        else:
            nrm = np.max(np.abs(v))
        total += nrm ** space.outer_p
    return total ** (1.0 / space.outer_p)


def _simplex_grid(m, resolution):
    """All lattice points k/resolution on the (m-1)-simplex."""
    for cuts in itertools.combinations(range(resolution + m - 1), m - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(resolution + m - 2 - prev)
        yield parts


def min_norm_oracle(space, event, t, grid_resolution, max_hull=4):
    """Brute-force upper bound on phi: minimum of G over a simplex grid.

    Independent of the conditional-gradient path; exponential in |A|, so the
    hull size is capped.
    """
    m = len(event)
    if m > max_hull:
        raise ValueError(f"oracle limited to |A| <= {max_hull}")
    if grid_resolution < 1:
        raise ValueError("grid_resolution must be positive")
    S = event_matrix(space, event)
    t_vec = outcome_vector(space, t)
    offs = space.block_offsets()
    p = space.outer_p

    grid = np.array(list(_simplex_grid(m, grid_resolution)), dtype=float)
    grid /= grid_resolution
    best = np.inf
    chunk = 200_000
    for start in range(0, grid.shape[0], chunk):
        W = grid[start:start + chunk]
        X = W @ S  # combinations
        R = t_vec[None, :] - X
        G = np.zeros(W.shape[0])
        for b, blk in enumerate(space.blocks):
            V = R[:, offs[b]:offs[b + 1]]
            if blk.norm == "L1":
                nrm = np.sum(np.abs(V), axis=1)
            elif blk.norm == "L2":
                nrm = np.sqrt(np.sum(V * V, axis=1))
            else:
                nrm = np.max(np.abs(V), axis=1)
            G += nrm ** p
        best = min(best, float(G.min()))
    return best ** (1.0 / p)

"""Pure-NumPy away-step conditional gradient over the simplex.

Minimizes G(lam) = sum_i ||t_i - (S^T lam)_i||_i^p over the probability
simplex, where the rows of S are the hull vertices and the coordinate vector
splits into blocks with per-block norms.  Mirrors the compiled kernel in
``_fwcore.pyx``; keep the two in sync.
"""

import numpy as np

_LINESEARCH_STEPS = 60
_REFRESH_EVERY = 64
_MAX_STALLS = 3
_STAGNATION_WINDOW = 500
_STAGNATION_IMPROVEMENT = 1e-3
_MU_INIT_FRACTION = 0.05
_MU_SHRINK = 0.125
_SMOOTH_GAP_FLOOR = 1e-18


def _block_value_grad(r, offsets, codes, p, want_grad):
    """Objective contribution and d/dx of sum_i ||r_i||^p at residual r = t - x.

    For L1 the minimal-norm subgradient is used (0 at zero coordinates); for
    LINF the lowest tied max coordinate carries the whole subgradient.
    """
    n_blocks = len(codes)
    total = 0.0
    grad = np.zeros_like(r) if want_grad else None
    for b in range(n_blocks):
        lo, hi = offsets[b], offsets[b + 1]
        v = r[lo:hi]
        code = codes[b]
        if code == 0:  # L1
            nrm = float(np.sum(np.abs(v)))
        elif code == 1:  # L2
            nrm = float(np.sqrt(np.sum(v * v)))
        else:  # LINF
            nrm = float(np.max(np.abs(v)))
        total += nrm ** p
        if not want_grad or nrm == 0.0:
            continue
        if code == 0:
            grad[lo:hi] = -p * nrm ** (p - 1.0) * np.sign(v)
        elif code == 1:
            grad[lo:hi] = -p * nrm ** (p - 2.0) * v
        else:
            j = int(np.argmax(np.abs(v)))
            grad[lo + j] = -p * nrm ** (p - 1.0) * np.sign(v[j])
    return total, grad


def _objective(x, t, offsets, codes, p):
    val, _ = _block_value_grad(t - x, offsets, codes, p, want_grad=False)
    return val


def _dphi(x, u, gamma, t, offsets, codes, p):
    _, g = _block_value_grad(t - (x + gamma * u), offsets, codes, p, want_grad=True)
    return float(g @ u)


def _line_search(x, u, gamma_max, t, offsets, codes, p):
    """Bisection on the (nondecreasing) directional derivative of a convex slice."""
    d_hi = _dphi(x, u, gamma_max, t, offsets, codes, p)
    if d_hi <= 0.0:
        return gamma_max
    d_lo = _dphi(x, u, 0.0, t, offsets, codes, p)
    if d_lo >= 0.0:
        return 0.0
    lo, hi = 0.0, gamma_max
    for _ in range(_LINESEARCH_STEPS):
        mid = 0.5 * (lo + hi)
        if _dphi(x, u, mid, t, offsets, codes, p) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_simplex_fw(S, t, offsets, codes, p, tol, max_iter):
    """Away-step Frank-Wolfe with a duality-gap certificate.

    Returns (lam, G_upper, G_lower, iterations) where G_upper is recomputed
    from the returned coefficients and G_lower is the best linearization
    lower bound on the optimum (may be -inf if no gradient step ran).
    """
    S = np.ascontiguousarray(S, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    m = S.shape[0]

    # start at the nearest vertex
    best0, g0 = 0, np.inf
    for a in range(m):
        val = _objective(S[a], t, offsets, codes, p)
        if val < g0:
            best0, g0 = a, val
    lam = np.zeros(m)
    lam[best0] = 1.0
    x = S[best0].copy()

    lower = -np.inf
    iters = 0
    stalls = 0
    best_gap = np.inf
    checkpoint_gap = np.inf
    since_progress = 0
    for it in range(max_iter):
        iters = it + 1
        g_cur, dGdx = _block_value_grad(t - x, offsets, codes, p, want_grad=True)
        g = S @ dGdx
        g_dot_lam = float(g @ lam)
        i_fw = int(np.argmin(g))
        fw_gap = g_dot_lam - float(g[i_fw])
        lower = max(lower, g_cur - fw_gap)
        ub = g_cur ** (1.0 / p)
        lb = max(lower, 0.0) ** (1.0 / p)
        if ub - lb <= tol:
            break
        # stagnation exit: checkpoint the gap and require relative progress
        if ub - lb < best_gap:
            best_gap = ub - lb
        since_progress += 1
        if since_progress >= _STAGNATION_WINDOW:
            if best_gap > (1.0 - _STAGNATION_IMPROVEMENT) * checkpoint_gap:
                break
            checkpoint_gap = best_gap
            since_progress = 0

        active = np.flatnonzero(lam > 0.0)
        i_aw = int(active[np.argmax(g[active])])
        away_gap = float(g[i_aw]) - g_dot_lam

        prefer_away = away_gap > fw_gap and lam[i_aw] < 1.0
        gamma = 0.0
        away = False
        for choice in (prefer_away, not prefer_away):
            if choice and not lam[i_aw] < 1.0:
                continue
            if choice:
                u = x - S[i_aw]
                gamma_max = lam[i_aw] / (1.0 - lam[i_aw])
            else:
                u = S[i_fw] - x
                gamma_max = 1.0
            gamma = _line_search(x, u, gamma_max, t, offsets, codes, p)
            if gamma > 0.0:
                away = choice
                break
        if gamma <= 0.0:
            stalls += 1
            if stalls >= _MAX_STALLS:
                break
            continue
        stalls = 0

        if away:
            lam *= 1.0 + gamma
            lam[i_aw] -= gamma
            if lam[i_aw] < 0.0:
                lam[i_aw] = 0.0
        else:
            lam *= 1.0 - gamma
            lam[i_fw] += gamma
        x = x + gamma * u
        if (it + 1) % _REFRESH_EVERY == 0:
            np.clip(lam, 0.0, None, out=lam)
            lam /= lam.sum()
            x = S.T @ lam

    np.clip(lam, 0.0, None, out=lam)
    lam /= lam.sum()
    x = S.T @ lam
    g_final = _objective(x, t, offsets, codes, p)
    lower = min(lower, g_final)
    return lam, g_final, lower, iters


def _smoothed_value_grad(r, offsets, codes, p, mu, want_grad):
    """Smooth under-approximation of the objective and its d/dx.

    Per block the smoothed norm never exceeds the true one (L1 via
    sqrt(v^2 + mu^2) - mu per coordinate, LINF via a shifted log-sum-exp minus
    mu*log(2d)), clamped at zero, so lower bounds computed from it remain
    sound for the true objective.  L2 blocks are untouched.
    """
    n_blocks = len(codes)
    total = 0.0
    grad = np.zeros_like(r) if want_grad else None
    for b in range(n_blocks):
        lo, hi = offsets[b], offsets[b + 1]
        v = r[lo:hi]
        code = codes[b]
        d = hi - lo
        if code == 1:  # L2 is already smooth away from zero
            nrm = float(np.sqrt(np.sum(v * v)))
            total += nrm ** p
            if want_grad and nrm > 0.0:
                grad[lo:hi] = -p * nrm ** (p - 2.0) * v
            continue
        if code == 0:  # L1
            s = np.sqrt(v * v + mu * mu)
            n_eff = float(s.sum()) - d * mu
            dn = v / s
        else:  # LINF
            top = float(np.max(np.abs(v)))
            ep = np.exp((v - top) / mu)
            en = np.exp((-v - top) / mu)
            z = float(ep.sum() + en.sum())
            n_eff = top + mu * np.log(z) - mu * np.log(2.0 * d)
            dn = (ep - en) / z
        if n_eff <= 0.0:
            continue
        total += n_eff ** p
        if want_grad:
            grad[lo:hi] = -p * n_eff ** (p - 1.0) * dn
    return total, grad


def _smoothed_dphi(x, u, gamma, t, offsets, codes, p, mu):
    _, g = _smoothed_value_grad(t - (x + gamma * u), offsets, codes, p, mu,
                                want_grad=True)
    return float(g @ u)


def _smoothed_line_search(x, u, gamma_max, t, offsets, codes, p, mu):
    if _smoothed_dphi(x, u, gamma_max, t, offsets, codes, p, mu) <= 0.0:
        return gamma_max
    if _smoothed_dphi(x, u, 0.0, t, offsets, codes, p, mu) >= 0.0:
        return 0.0
    lo, hi = 0.0, gamma_max
    for _ in range(_LINESEARCH_STEPS):
        mid = 0.5 * (lo + hi)
        if _smoothed_dphi(x, u, mid, t, offsets, codes, p, mu) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_simplex_fw_smoothed(S, t, offsets, codes, p, tol, max_iter):
    """Away-step Frank-Wolfe on a smoothed under-approximation with continuation.

    The smoothing width mu shrinks whenever the smoothed duality gap falls
    below the current approximation error, so iterations are spent only where
    they still improve the true bracket.  Upper bounds always come from the
    true objective; lower bounds from smoothed gaps stay valid because the
    smoothed objective never exceeds the true one.  Same return contract as
    ``solve_simplex_fw``.
    """
    S = np.ascontiguousarray(S, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    m = S.shape[0]

    best0, g0 = 0, np.inf
    for a in range(m):
        val = _objective(S[a], t, offsets, codes, p)
        if val < g0:
            best0, g0 = a, val
    lam = np.zeros(m)
    lam[best0] = 1.0
    x = S[best0].copy()

    mu = max(_MU_INIT_FRACTION * g0 ** (1.0 / p), 1e-12)
    lower = -np.inf
    iters = 0
    for it in range(max_iter):
        iters = it + 1
        g_s, dGdx = _smoothed_value_grad(t - x, offsets, codes, p, mu,
                                         want_grad=True)
        g = S @ dGdx
        g_dot_lam = float(g @ lam)
        i_fw = int(np.argmin(g))
        fw_gap = g_dot_lam - float(g[i_fw])
        lower = max(lower, g_s - fw_gap)
        g_true = _objective(x, t, offsets, codes, p)
        ub = g_true ** (1.0 / p)
        lb = max(lower, 0.0) ** (1.0 / p)
        if ub - lb <= tol:
            break
        # tighten the smoothing once the smoothed problem is solved to
        # within its own approximation error
        if fw_gap <= max(0.5 * (g_true - g_s), _SMOOTH_GAP_FLOOR):
            mu *= _MU_SHRINK
            continue

        active = np.flatnonzero(lam > 0.0)
        i_aw = int(active[np.argmax(g[active])])
        away_gap = float(g[i_aw]) - g_dot_lam
        if away_gap > fw_gap and lam[i_aw] < 1.0:
            u = x - S[i_aw]
            gamma_max = lam[i_aw] / (1.0 - lam[i_aw])
            away = True
        else:
            u = S[i_fw] - x
            gamma_max = 1.0
            away = False
        gamma = _smoothed_line_search(x, u, gamma_max, t, offsets, codes, p, mu)
        if gamma <= 0.0:
            mu *= _MU_SHRINK
            continue

        if away:
            lam *= 1.0 + gamma
            lam[i_aw] -= gamma
            if lam[i_aw] < 0.0:
                lam[i_aw] = 0.0
        else:
            lam *= 1.0 - gamma
            lam[i_fw] += gamma
        x = x + gamma * u
        if (it + 1) % _REFRESH_EVERY == 0:
            np.clip(lam, 0.0, None, out=lam)
            lam /= lam.sum()
            x = S.T @ lam

    np.clip(lam, 0.0, None, out=lam)
    lam /= lam.sum()
    x = S.T @ lam
    g_final = _objective(x, t, offsets, codes, p)
    lower = min(lower, g_final)
    return lam, g_final, lower, iters

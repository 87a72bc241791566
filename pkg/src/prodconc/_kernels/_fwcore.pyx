# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled away-step conditional gradient over the simplex.

Same contract as ``fallback.solve_simplex_fw``; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, pow, sqrt

cnp.import_array()

DEF LINESEARCH_STEPS = 60
DEF REFRESH_EVERY = 64
DEF MAX_STALLS = 3
DEF STAGNATION_WINDOW = 500
DEF STAGNATION_IMPROVEMENT = 1e-3
DEF MU_INIT_FRACTION = 0.05
DEF MU_SHRINK = 0.125
DEF SMOOTH_GAP_FLOOR = 1e-18


cdef double _value_grad(double* r, double* grad, Py_ssize_t D,
                        long* offs, int* codes, Py_ssize_t n_blocks,
                        double p, bint want_grad) noexcept nogil:
    cdef Py_ssize_t b, j, lo, hi, jmax
    cdef double total = 0.0, nrm, coef, av, vmax
    for b in range(n_blocks):
        lo = offs[b]
        hi = offs[b + 1]
        if codes[b] == 0:  # L1
            nrm = 0.0
            for j in range(lo, hi):
                nrm += fabs(r[j])
        elif codes[b] == 1:  # L2
            nrm = 0.0
            for j in range(lo, hi):
                nrm += r[j] * r[j]
            nrm = sqrt(nrm)
        else:  # LINF
            nrm = 0.0
            for j in range(lo, hi):
                av = fabs(r[j])
                if av > nrm:
                    nrm = av
        total += pow(nrm, p)
        if not want_grad:
            continue
        if nrm == 0.0:
            for j in range(lo, hi):
                grad[j] = 0.0
            continue
        if codes[b] == 0:
            coef = p * pow(nrm, p - 1.0)
            for j in range(lo, hi):
                if r[j] > 0.0:
                    grad[j] = -coef
                elif r[j] < 0.0:
                    grad[j] = coef
                else:
                    grad[j] = 0.0
        elif codes[b] == 1:
            coef = p * pow(nrm, p - 2.0)
            for j in range(lo, hi):
                grad[j] = -coef * r[j]
        else:
            jmax = lo
            vmax = fabs(r[lo])
            for j in range(lo + 1, hi):
                av = fabs(r[j])
                if av > vmax:
                    vmax = av
                    jmax = j
            coef = p * pow(nrm, p - 1.0)
            for j in range(lo, hi):
                grad[j] = 0.0
            grad[jmax] = -coef if r[jmax] > 0.0 else coef
    return total


cdef double _dphi(double* x, double* u, double gamma, double* t,
                  double* rbuf, double* gbuf, Py_ssize_t D,
                  long* offs, int* codes, Py_ssize_t n_blocks,
                  double p) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(D):
        rbuf[j] = t[j] - (x[j] + gamma * u[j])
    _value_grad(rbuf, gbuf, D, offs, codes, n_blocks, p, True)
    for j in range(D):
        acc += gbuf[j] * u[j]
    return acc


cdef double _line_search(double* x, double* u, double gamma_max, double* t,
                         double* rbuf, double* gbuf, Py_ssize_t D,
                         long* offs, int* codes, Py_ssize_t n_blocks,
                         double p) noexcept nogil:
    cdef double lo = 0.0, hi = gamma_max, mid
    cdef int it
    if _dphi(x, u, gamma_max, t, rbuf, gbuf, D, offs, codes, n_blocks, p) <= 0.0:
        return gamma_max
    if _dphi(x, u, 0.0, t, rbuf, gbuf, D, offs, codes, n_blocks, p) >= 0.0:
        return 0.0
    for it in range(LINESEARCH_STEPS):
        mid = 0.5 * (lo + hi)
        if _dphi(x, u, mid, t, rbuf, gbuf, D, offs, codes, n_blocks, p) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_simplex_fw(S_in, t_in, offsets_in, codes_in, double p, double tol,
                     long max_iter):
    """Away-step Frank-Wolfe; see the fallback module for the contract."""
    cdef double[:, ::1] S = np.ascontiguousarray(S_in, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef long[::1] offs = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef int[::1] codes = np.ascontiguousarray(codes_in, dtype=np.int32)
    cdef Py_ssize_t m = S.shape[0], D = S.shape[1], nb = codes.shape[0]

    lam_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    cdef double[::1] x = np.zeros(D, dtype=np.float64)
    cdef double[::1] u = np.zeros(D, dtype=np.float64)
    cdef double[::1] rbuf = np.zeros(D, dtype=np.float64)
    cdef double[::1] gbuf = np.zeros(D, dtype=np.float64)
    cdef double[::1] dGdx = np.zeros(D, dtype=np.float64)
    cdef double[::1] g = np.zeros(m, dtype=np.float64)

    cdef Py_ssize_t a, j, it, best0 = 0, i_fw, i_aw
    cdef double val, g0, g_cur, g_dot_lam, fw_gap, away_gap, gamma, gamma_max
    cdef double lower, ub, lb, lam_sum, g_final, best_gap = 1e308, checkpoint_gap = 1e308
    cdef int stalls = 0, iters = 0, pass_idx, since_progress = 0
    cdef bint away, prefer_away, choice, moved

    # start at the nearest vertex
    g0 = np.inf
    with nogil:
        for a in range(m):
            for j in range(D):
                rbuf[j] = t[j] - S[a, j]
            val = _value_grad(&rbuf[0], &gbuf[0], D, &offs[0], &codes[0], nb, p, False)
            if val < g0:
                g0 = val
                best0 = a
        lam[best0] = 1.0
        for j in range(D):
            x[j] = S[best0, j]

        lower = -1e308
        for it in range(max_iter):
            iters = it + 1
            for j in range(D):
                rbuf[j] = t[j] - x[j]
            g_cur = _value_grad(&rbuf[0], &dGdx[0], D, &offs[0], &codes[0], nb, p, True)
            g_dot_lam = 0.0
            i_fw = 0
            i_aw = -1
            for a in range(m):
                val = 0.0
                for j in range(D):
                    val += S[a, j] * dGdx[j]
                g[a] = val
                if val < g[i_fw]:
                    i_fw = a
                if lam[a] > 0.0:
                    g_dot_lam += lam[a] * val
                    if i_aw < 0 or val > g[i_aw]:
                        i_aw = a
            fw_gap = g_dot_lam - g[i_fw]
            if g_cur - fw_gap > lower:
                lower = g_cur - fw_gap
            ub = pow(g_cur, 1.0 / p)
            lb = pow(lower, 1.0 / p) if lower > 0.0 else 0.0
            if ub - lb <= tol:
                break
            # stagnation exit: checkpoint the gap and require relative progress
            if ub - lb < best_gap:
                best_gap = ub - lb
            since_progress += 1
            if since_progress >= STAGNATION_WINDOW:
                if best_gap > (1.0 - STAGNATION_IMPROVEMENT) * checkpoint_gap:
                    break
                checkpoint_gap = best_gap
                since_progress = 0

            away_gap = g[i_aw] - g_dot_lam
            prefer_away = away_gap > fw_gap and lam[i_aw] < 1.0
            gamma = 0.0
            away = False
            moved = False
            for pass_idx in range(2):
                choice = prefer_away if pass_idx == 0 else (not prefer_away)
                if choice and lam[i_aw] >= 1.0:
                    continue
                if choice:
                    for j in range(D):
                        u[j] = x[j] - S[i_aw, j]
                    gamma_max = lam[i_aw] / (1.0 - lam[i_aw])
                else:
                    for j in range(D):
                        u[j] = S[i_fw, j] - x[j]
                    gamma_max = 1.0
                gamma = _line_search(&x[0], &u[0], gamma_max, &t[0], &rbuf[0],
                                     &gbuf[0], D, &offs[0], &codes[0], nb, p)
                if gamma > 0.0:
                    away = choice
                    moved = True
                    break
            if not moved:
                stalls += 1
                if stalls >= MAX_STALLS:
                    break
                continue
            stalls = 0

            if away:
                for a in range(m):
                    lam[a] *= 1.0 + gamma
                lam[i_aw] -= gamma
                if lam[i_aw] < 0.0:
                    lam[i_aw] = 0.0
            else:
                for a in range(m):
                    lam[a] *= 1.0 - gamma
                lam[i_fw] += gamma
            for j in range(D):
                x[j] += gamma * u[j]
            if (it + 1) % REFRESH_EVERY == 0:
                lam_sum = 0.0
                for a in range(m):
                    if lam[a] < 0.0:
                        lam[a] = 0.0
                    lam_sum += lam[a]
                for a in range(m):
                    lam[a] /= lam_sum
                for j in range(D):
                    x[j] = 0.0
                for a in range(m):
                    if lam[a] != 0.0:
                        for j in range(D):
                            x[j] += lam[a] * S[a, j]

        # final exact recomputation from the coefficients
        lam_sum = 0.0
        for a in range(m):
            if lam[a] < 0.0:
                lam[a] = 0.0
            lam_sum += lam[a]
        for a in range(m):
            lam[a] /= lam_sum
        for j in range(D):
            x[j] = 0.0
        for a in range(m):
            if lam[a] != 0.0:
                for j in range(D):
                    x[j] += lam[a] * S[a, j]
        for j in range(D):
            rbuf[j] = t[j] - x[j]
        g_final = _value_grad(&rbuf[0], &gbuf[0], D, &offs[0], &codes[0], nb, p, False)
        if lower > g_final:
            lower = g_final

    return lam_arr, g_final, (lower if lower > -1e308 else -np.inf), iters


cdef double _smoothed_value_grad(double* r, double* grad, Py_ssize_t D,
                                 long* offs, int* codes, Py_ssize_t n_blocks,
                                 double p, double mu, bint want_grad) noexcept nogil:
    # smooth under-approximation: per block the smoothed norm never exceeds
    # the true one, so lower bounds stay sound for the true objective
    cdef Py_ssize_t b, j, lo, hi, d
    cdef double total = 0.0, n_eff, coef, nrm, s, top, av, z, ep, en
    for b in range(n_blocks):
        lo = offs[b]
        hi = offs[b + 1]
        d = hi - lo
        if want_grad:
            for j in range(lo, hi):
                grad[j] = 0.0
        if codes[b] == 1:  # L2 already smooth away from zero
            nrm = 0.0
            for j in range(lo, hi):
                nrm += r[j] * r[j]
            nrm = sqrt(nrm)
            total += pow(nrm, p)
            if want_grad and nrm > 0.0:
                coef = p * pow(nrm, p - 2.0)
                for j in range(lo, hi):
                    grad[j] = -coef * r[j]
            continue
        if codes[b] == 0:  # L1: sum sqrt(v^2 + mu^2) - d*mu
            n_eff = 0.0
            for j in range(lo, hi):
                n_eff += sqrt(r[j] * r[j] + mu * mu)
            n_eff -= d * mu
            if n_eff <= 0.0:
                continue
            total += pow(n_eff, p)
            if want_grad:
                coef = p * pow(n_eff, p - 1.0)
                for j in range(lo, hi):
                    s = sqrt(r[j] * r[j] + mu * mu)
                    grad[j] = -coef * r[j] / s
        else:  # LINF: shifted log-sum-exp over +/- coordinates
            top = 0.0
            for j in range(lo, hi):
                av = fabs(r[j])
                if av > top:
                    top = av
            z = 0.0
            for j in range(lo, hi):
                z += exp((r[j] - top) / mu) + exp((-r[j] - top) / mu)
            n_eff = top + mu * log(z) - mu * log(2.0 * d)
            if n_eff <= 0.0:
                continue
            total += pow(n_eff, p)
            if want_grad:
                coef = p * pow(n_eff, p - 1.0)
                for j in range(lo, hi):
                    ep = exp((r[j] - top) / mu)
                    en = exp((-r[j] - top) / mu)
                    grad[j] = -coef * (ep - en) / z
    return total


cdef double _smoothed_dphi(double* x, double* u, double gamma, double* t,
                           double* rbuf, double* gbuf, Py_ssize_t D,
                           long* offs, int* codes, Py_ssize_t n_blocks,
                           double p, double mu) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(D):
        rbuf[j] = t[j] - (x[j] + gamma * u[j])
    _smoothed_value_grad(rbuf, gbuf, D, offs, codes, n_blocks, p, mu, True)
    for j in range(D):
        acc += gbuf[j] * u[j]
    return acc


cdef double _smoothed_line_search(double* x, double* u, double gamma_max,
                                  double* t, double* rbuf, double* gbuf,
                                  Py_ssize_t D, long* offs, int* codes,
                                  Py_ssize_t n_blocks, double p,
                                  double mu) noexcept nogil:
    cdef double lo = 0.0, hi = gamma_max, mid
    cdef int it
    if _smoothed_dphi(x, u, gamma_max, t, rbuf, gbuf, D, offs, codes,
                      n_blocks, p, mu) <= 0.0:
        return gamma_max
    if _smoothed_dphi(x, u, 0.0, t, rbuf, gbuf, D, offs, codes,
                      n_blocks, p, mu) >= 0.0:
        return 0.0
    for it in range(LINESEARCH_STEPS):
        mid = 0.5 * (lo + hi)
        if _smoothed_dphi(x, u, mid, t, rbuf, gbuf, D, offs, codes,
                          n_blocks, p, mu) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_simplex_fw_smoothed(S_in, t_in, offsets_in, codes_in, double p,
                              double tol, long max_iter):
    """Smoothed-continuation away-step Frank-Wolfe; see the fallback module."""
    cdef double[:, ::1] S = np.ascontiguousarray(S_in, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(t_in, dtype=np.float64)
    cdef long[::1] offs = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef int[::1] codes = np.ascontiguousarray(codes_in, dtype=np.int32)
    cdef Py_ssize_t m = S.shape[0], D = S.shape[1], nb = codes.shape[0]

    lam_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] lam = lam_arr
    cdef double[::1] x = np.zeros(D, dtype=np.float64)
    cdef double[::1] u = np.zeros(D, dtype=np.float64)
    cdef double[::1] rbuf = np.zeros(D, dtype=np.float64)
    cdef double[::1] gbuf = np.zeros(D, dtype=np.float64)
    cdef double[::1] dGdx = np.zeros(D, dtype=np.float64)
    cdef double[::1] g = np.zeros(m, dtype=np.float64)

    cdef Py_ssize_t a, j, it, best0 = 0, i_fw, i_aw
    cdef double val, g0, g_s, g_true, g_dot_lam, fw_gap, away_gap, gamma
    cdef double gamma_max, lower, ub, lb, lam_sum, g_final, mu
    cdef int iters = 0
    cdef bint away

    g0 = np.inf
    with nogil:
        for a in range(m):
            for j in range(D):
                rbuf[j] = t[j] - S[a, j]
            val = _value_grad(&rbuf[0], &gbuf[0], D, &offs[0], &codes[0], nb, p, False)
            if val < g0:
                g0 = val
                best0 = a
        lam[best0] = 1.0
        for j in range(D):
            x[j] = S[best0, j]

        mu = MU_INIT_FRACTION * pow(g0, 1.0 / p)
        if mu < 1e-12:
            mu = 1e-12
        lower = -1e308
        for it in range(max_iter):
            iters = it + 1
            for j in range(D):
                rbuf[j] = t[j] - x[j]
            g_s = _smoothed_value_grad(&rbuf[0], &dGdx[0], D, &offs[0],
                                       &codes[0], nb, p, mu, True)
            g_true = _value_grad(&rbuf[0], &gbuf[0], D, &offs[0], &codes[0],
                                 nb, p, False)
            g_dot_lam = 0.0
            i_fw = 0
            i_aw = -1
            for a in range(m):
                val = 0.0
                for j in range(D):
                    val += S[a, j] * dGdx[j]
                g[a] = val
                if val < g[i_fw]:
                    i_fw = a
                if lam[a] > 0.0:
                    g_dot_lam += lam[a] * val
                    if i_aw < 0 or val > g[i_aw]:
                        i_aw = a
            fw_gap = g_dot_lam - g[i_fw]
            if g_s - fw_gap > lower:
                lower = g_s - fw_gap
            ub = pow(g_true, 1.0 / p)
            lb = pow(lower, 1.0 / p) if lower > 0.0 else 0.0
            if ub - lb <= tol:
                break
            # tighten the smoothing once the smoothed problem is solved to
            # within its own approximation error
            val = 0.5 * (g_true - g_s)
            if val < SMOOTH_GAP_FLOOR:
                val = SMOOTH_GAP_FLOOR
            if fw_gap <= val:
                mu *= MU_SHRINK
                continue

            away_gap = g[i_aw] - g_dot_lam
            if away_gap > fw_gap and lam[i_aw] < 1.0:
                for j in range(D):
                    u[j] = x[j] - S[i_aw, j]
                gamma_max = lam[i_aw] / (1.0 - lam[i_aw])
                away = True
            else:
                for j in range(D):
                    u[j] = S[i_fw, j] - x[j]
                gamma_max = 1.0
                away = False
            gamma = _smoothed_line_search(&x[0], &u[0], gamma_max, &t[0],
                                          &rbuf[0], &gbuf[0], D, &offs[0],
                                          &codes[0], nb, p, mu)
            if gamma <= 0.0:
                mu *= MU_SHRINK
                continue

            if away:
                for a in range(m):
                    lam[a] *= 1.0 + gamma
                lam[i_aw] -= gamma
                if lam[i_aw] < 0.0:
                    lam[i_aw] = 0.0
            else:
                for a in range(m):
                    lam[a] *= 1.0 - gamma
                lam[i_fw] += gamma
            for j in range(D):
                x[j] += gamma * u[j]
            if (it + 1) % REFRESH_EVERY == 0:
                lam_sum = 0.0
                for a in range(m):
                    if lam[a] < 0.0:
                        lam[a] = 0.0
                    lam_sum += lam[a]
                for a in range(m):
                    lam[a] /= lam_sum
                for j in range(D):
                    x[j] = 0.0
                for a in range(m):
                    if lam[a] != 0.0:
                        for j in range(D):
                            x[j] += lam[a] * S[a, j]

        lam_sum = 0.0
        for a in range(m):
            if lam[a] < 0.0:
                lam[a] = 0.0
            lam_sum += lam[a]
        for a in range(m):
            lam[a] /= lam_sum
        for j in range(D):
            x[j] = 0.0
        for a in range(m):
            if lam[a] != 0.0:
                for j in range(D):
                    x[j] += lam[a] * S[a, j]
        for j in range(D):
            rbuf[j] = t[j] - x[j]
        g_final = _value_grad(&rbuf[0], &gbuf[0], D, &offs[0], &codes[0], nb, p, False)
        if lower > g_final:
            lower = g_final

    return lam_arr, g_final, (lower if lower > -1e308 else -np.inf), iters

"""Randomized coordinate selection for subspaces of L_r({1..N}, mu).

Pipeline: estimate the norm-equivalence constant K with ||x||_s <= K||x||_r,
split heavy atoms, build an epsilon-net on the unit sphere of the subspace,
size the Bernoulli selection (delta, k), then draw selections until the net
certifies a (1+epsilon)-isomorphism up to the scalar factor delta^{1/r}.
The iteration driver repeats the pipeline with a fresh density each round.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatchError,
    RetriesExhaustedError,
    SubspaceValidationError,
)
from .rng import derive_rng

RANK_TOL = 1e-10


@dataclass(frozen=True)
class SampledSubspace:
    """n-dimensional subspace of L_r({1..N}, mu), spanned by basis columns.

    Requires 0 < r < s <= 2r; q = s/r and its conjugate p drive the
    selection sizing.
    """

    basis: np.ndarray  # (N, n)
    mu: np.ndarray     # (N,)
    r: float
    s: float

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=float)
        mu = np.ascontiguousarray(self.mu, dtype=float)
        if basis.ndim != 2:
            raise SubspaceValidationError("basis must be an N x n table")
        if mu.shape != (basis.shape[0],):
            raise SubspaceValidationError("mu needs one weight per atom")
        if np.any(mu < 0):
            raise SubspaceValidationError("mu must be nonnegative")
        if abs(float(mu.sum()) - 1.0) > 1e-12:
            raise SubspaceValidationError("mu must sum to 1 within 1e-12")
        if not 0.0 < self.r < self.s <= 2.0 * self.r:
            raise SubspaceValidationError("need 0 < r < s <= 2r")
        if np.linalg.matrix_rank(basis, tol=RANK_TOL) < basis.shape[1]:
            raise SubspaceValidationError("basis columns must be independent")
        basis.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "mu", mu)

    @property
    def N(self):
        return self.basis.shape[0]

    @property
    def n(self):
        return self.basis.shape[1]

    @property
    def q(self):
        return self.s / self.r

    @property
    def p_exp(self):
        q = self.q
        return q / (q - 1.0)


# ---------------------------------------------------------------------------
# JSON interchange


def subspace_to_dict(sub):
    return {
        "basis": sub.basis.tolist(),
        "mu": sub.mu.tolist(),
        "r": sub.r,
        "s": sub.s,
    }


def subspace_from_dict(data):
    return SampledSubspace(basis=np.array(data["basis"], dtype=float),
                           mu=np.array(data["mu"], dtype=float),
                           r=float(data["r"]), s=float(data["s"]))


def load_subspace(path):
    with open(path) as fh:
        return subspace_from_dict(json.load(fh))


def save_subspace(sub, path):
    with open(path, "w") as fh:
        json.dump(subspace_to_dict(sub), fh, indent=2)


def function_values(sub, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (sub.n,):
        raise DimensionMismatchError(f"expected coefficient vector of length {sub.n}")
    return sub.basis @ x


def lr_norm(sub, x, exponent=None):
    """||sum_j x_j basis_j||_{L_u(mu)} with u defaulting to the subspace r."""
    u = sub.r if exponent is None else float(exponent)
    vals = np.abs(function_values(sub, x))
    return float(np.sum(sub.mu * vals ** u) ** (1.0 / u))


def _norm_ratio(sub, x):
    vals = np.abs(sub.basis @ x)
    nr = np.sum(sub.mu * vals ** sub.r) ** (1.0 / sub.r)
    if nr == 0.0:
        return 0.0
    ns = np.sum(sub.mu * vals ** sub.s) ** (1.0 / sub.s)
    return float(ns / nr)


def estimate_K(sub, budget=256, seed=0):
    """Lower-bound estimate of sup ||x||_s / ||x||_r over the subspace.

    Probes the coordinate directions plus seeded random ones, then runs a
    coordinate-perturbation ascent with shrinking step.  Callers with an
    analytic K should prefer it; this estimate only feeds sizing.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = derive_rng(seed, "estimate-k")
    cands = [np.eye(sub.n)[j] for j in range(sub.n)]
    cands += list(rng.standard_normal((budget, sub.n)))
    best_x, best = None, 0.0
    for x in cands:
        val = _norm_ratio(sub, x)
        if val > best:
            best, best_x = val, np.asarray(x, dtype=float)
    if best_x is None:
        raise SubspaceValidationError("all probe directions have zero norm")
    step = 0.5
    while step > 1e-6:
        improved = False
        for j in range(sub.n):
            for sign in (1.0, -1.0):
                x = best_x.copy()
                x[j] += sign * step
                val = _norm_ratio(sub, x)
                if val > best + 1e-9:
                    best, best_x = val, x
                    improved = True
        if not improved:
            step *= 0.5
    return best


def split_atoms(sub, cap):
    """Split every atom heavier than cap into equal-weight copies.

    Norms of every represented function are preserved exactly; cap >= 1 is a
    no-op.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    if cap >= 1.0 or np.all(sub.mu <= cap):
        return sub
    rows = []
    weights = []
    for i in range(sub.N):
        copies = max(1, math.ceil(sub.mu[i] / cap - 1e-15))
        for _ in range(copies):
            rows.append(sub.basis[i])
            weights.append(sub.mu[i] / copies)
    mu = np.asarray(weights)
    return SampledSubspace(basis=np.asarray(rows), mu=mu / mu.sum(),
                           r=sub.r, s=sub.s)


@dataclass(frozen=True)
class NetSpec:
    """Finite net of unit vectors (in ||.||_r) with an empirical covering audit."""

    epsilon: float
    points: np.ndarray  # (size, n) coefficient vectors, lr_norm 1
    certified: bool
    probe_count: int
    theoretical_exponent: float

    @property
    def size(self):
        return self.points.shape[0]


def _min_net_dist(sub, values, probe_vals, shortlist=32):
    """Min r-metric distance (r-th power) from each probe row to the net.

    A weighted-Euclidean shortlist prunes candidates; the reported minima are
    always true r-metric values, so "covered" verdicts are exact and only
    "uncovered" verdicts can be conservative (the shortlist may miss a
    nearer point, which at worst adds a redundant net point).
    """
    r = sub.r
    w = sub.mu
    sq = np.sqrt(w)
    U = values * sq[None, :]
    P = probe_vals * sq[None, :]
    d2 = (np.sum(P * P, axis=1)[:, None] - 2.0 * (P @ U.T)
          + np.sum(U * U, axis=1)[None, :])
    k = min(shortlist, values.shape[0])
    nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
    out = np.empty(probe_vals.shape[0])
    for i in range(probe_vals.shape[0]):
        diff = np.abs(probe_vals[i][None, :] - values[nearest[i]])
        out[i] = np.sum(w[None, :] * diff ** r, axis=1).min()
    return out


def _covered(sub, values, probe_vals, epsilon):
    if values.shape[0] == 0:
        return np.zeros(probe_vals.shape[0], dtype=bool)
    return _min_net_dist(sub, values, probe_vals) <= epsilon ** sub.r


def _normalized_directions(sub, rng, count):
    X = rng.standard_normal((count, sub.n))
    out = []
    for x in X:
        nr = lr_norm(sub, x)
        if nr > 0:
            out.append(x / nr)
    return np.asarray(out)


def build_net(sub, epsilon, seed=0, probe_count=10_000, size_cap=50_000,
              batch=2048, max_audits=12, slack=0.85):
    """Greedy net on the unit sphere, audited on fresh probe directions.

    The net is built at the tighter radius slack*epsilon so boundary
    directions carry margin, then certified at epsilon: fresh probe samples
    are drawn until one is fully covered, with uncovered probes absorbed
    into the net along the way.
    """
    if not 0.0 < epsilon:
        raise ValueError("epsilon must be positive")
    points = []
    values = np.zeros((0, sub.N))
    eps_build = slack * epsilon

    def absorb(cands, radius):
        """Add every candidate not covered at the given radius."""
        nonlocal values
        if len(cands) == 0:
            return 0
        cands = np.asarray(cands)
        vals = cands @ sub.basis.T
        new = ~_covered(sub, values, vals, radius)
        added = 0
        for x, v, miss in zip(cands, vals, new):
            if not miss or len(points) >= size_cap:
                continue
            # recheck against points added within this batch
            if added and _covered(sub, values[-added:], v[None, :], radius)[0]:
                continue
            points.append(x)
            values = np.vstack([values, v[None, :]])
            added += 1
        return added

    # build phase: random directions until a batch adds nothing
    bi = 0
    idle = 0
    while idle < 2 and len(points) < size_cap:
        rng = derive_rng(seed, "net-build", bi)
        bi += 1
        if absorb(_normalized_directions(sub, rng, batch), eps_build) == 0:
            idle += 1
        else:
            idle = 0

    # audit phase: fresh probes; absorb any uncovered probe and re-audit
    certified = False
    for ai in range(max_audits):
        rng = derive_rng(seed, "net-probe", ai)
        probes = _normalized_directions(sub, rng, probe_count)
        uncovered_total = 0
        chunk = 2048
        for start in range(0, probes.shape[0], chunk):
            pts = probes[start:start + chunk]
            pv = pts @ sub.basis.T
            miss = ~_covered(sub, values, pv, epsilon)
            if np.any(miss):
                uncovered_total += int(miss.sum())
                absorb(pts[miss], eps_build)
        if uncovered_total == 0:
            certified = True
            break

    pts = np.asarray(points)
    pts.setflags(write=False)
    return NetSpec(epsilon=float(epsilon), points=pts, certified=certified,
                   probe_count=int(probe_count),
                   theoretical_exponent=sub.n * sub.r * math.log(2.0 / epsilon))


@dataclass(frozen=True)
class SelectionSizing:
    delta: float
    k_target: float
    eta: float
    q: float
    p: float
    flagged: bool  # delta > 1: instance too small for the asymptotic formula


def choose_delta_k(n, N, K, r, s, epsilon, c_universal=1.0):
    """Selection mean delta and target size k = 2*delta*N from the sizing identity.

    eta = c * eps^{rp} / (r log(2/eps)) and n = eta * delta^p * N / K^{rp}
    eliminate delta; delta > 1 is flagged rather than clipped.
    """
    if min(n, N, K, r, s, c_universal) <= 0:
        raise ValueError("all sizing inputs must be positive")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    q = s / r
    p = q / (q - 1.0)
    eta = c_universal * epsilon ** (r * p) / (r * math.log(2.0 / epsilon))
    delta = (n * K ** (r * p) / (eta * N)) ** (1.0 / p)
    k_target = 2.0 * delta * N
    return SelectionSizing(delta=delta, k_target=k_target, eta=eta, q=q, p=p,
                           flagged=delta > 1.0)


@dataclass(frozen=True)
class SelectionTrial:
    seed: int
    delta: float
    mask: np.ndarray
    k: int
    sums: np.ndarray        # S(x) per net point
    distortion: float
    passed: bool
    scale: float            # the "multiple": delta^{1/r}


def select_and_certify(sub, net, delta, epsilon, seed=0):
    """One Bernoulli(delta) selection, certified over the net.

    Pass iff every net point has |S(x) - delta| <= eps^r * delta where
    S(x) = sum_{i in A} mu(i)|X(i)|^r; the distortion (max S / min S)^{1/r}
    is reported regardless.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    rng = derive_rng(seed, "selection")
    mask = rng.random(sub.N) < delta
    W = sub.mu[None, :] * np.abs(net.points @ sub.basis.T) ** sub.r
    sums = W @ mask.astype(float)
    s_min, s_max = float(sums.min()), float(sums.max())
    distortion = (s_max / s_min) ** (1.0 / sub.r) if s_min > 0 else math.inf
    passed = bool(np.max(np.abs(sums - delta)) <= epsilon ** sub.r * delta)
    return SelectionTrial(seed=int(seed), delta=float(delta), mask=mask,
                          k=int(mask.sum()), sums=sums, distortion=distortion,
                          passed=passed, scale=delta ** (1.0 / sub.r))


def tail10_experiment(sub, x, delta, trials, c_grid, seed=0, K=None):
    """Empirical exceedance of |S(x) - delta| against the theoretical tail.

    Requires mu(i) <= 2/N and a unit vector in ||.||_r.  The bound is
    4 exp(-c^p N / (8 K^{rp})) with p conjugate to q = s/r.
    """
    if np.any(sub.mu > 2.0 / sub.N + 1e-12):
        raise ValueError("hypothesis mu(i) <= 2/N violated")
    if abs(lr_norm(sub, x) - 1.0) > 1e-10:
        raise ValueError("x must be a unit vector in ||.||_r")
    c_grid = [float(c) for c in c_grid]
    if not c_grid or any(c <= 0 for c in c_grid):
        raise ValueError("c_grid must be positive")
    if K is None:
        K = estimate_K(sub, seed=seed)
    p = sub.p_exp
    w = sub.mu * np.abs(function_values(sub, x)) ** sub.r
    cs = np.asarray(c_grid)
    bounds = 4.0 * np.exp(-cs ** p * sub.N / (8.0 * K ** (sub.r * p)))

    exceed = np.zeros(len(cs), dtype=np.int64)
    done = 0
    ci = 0
    chunk = 4096
    while done < trials:
        m = min(chunk, trials - done)
        rng = derive_rng(seed, "tail10", ci)
        masks = rng.random((m, sub.N)) < delta
        dev = np.abs(masks.astype(float) @ w - delta)
        for j, c in enumerate(cs):
            exceed[j] += int(np.count_nonzero(dev > c))
        done += m
        ci += 1
    emp = exceed / trials
    allowance = 3.0 * np.sqrt(emp / trials)
    flagged = tuple(bool(e - a > b) for e, a, b in zip(emp, allowance, bounds))
    return {
        "c_grid": tuple(cs.tolist()),
        "empirical": tuple(emp.tolist()),
        "bound": tuple(bounds.tolist()),
        "violated": flagged,
        "trials": int(trials),
        "seed": int(seed),
        "K": float(K),
        "delta": float(delta),
        "passed": not any(flagged),
    }


def uniform_density_provider(k_budget=256):
    """Density provider for the iteration driver: uniform mu, measured K."""

    def provider(sub, round_seed):
        mu = np.full(sub.N, 1.0 / sub.N)
        candidate = SampledSubspace(basis=sub.basis, mu=mu, r=sub.r, s=sub.s)
        return mu, estimate_K(candidate, budget=k_budget, seed=round_seed)

    return provider


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    noop: bool
    n_atoms_in: int
    n_atoms_split: int
    net_size: int
    net_certified: bool
    K: float
    epsilon: float
    delta: float
    k_target: float
    eta: float
    trial_seeds: tuple
    k_selected: int
    distortion: float
    scale: float
    passed: bool


def iterate_embedding(sub, rounds, epsilon_per_round, density_provider,
                      c_universal=1.0, seed=0, max_retries=32,
                      probe_count=10_000):
    """Repeated sparsification rounds; returns (records, final_subspace).

    Each round re-weights via the density provider, splits atoms to the 2/N
    cap, builds and audits a net, sizes the selection, then retries seeded
    selections until one certifies.  A round whose sizing is flagged
    (delta > 1) is recorded as a no-op.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    eps = list(epsilon_per_round)
    if len(eps) == 1:
        eps = eps * rounds
    if len(eps) != rounds:
        raise ValueError("need one epsilon per round")

    cur = sub
    records = []
    for j in range(rounds):
        round_seed = int(derive_rng(seed, "round-seed", j).integers(0, 2 ** 63))
        mu, K = density_provider(cur, round_seed)
        cur = SampledSubspace(basis=cur.basis, mu=np.asarray(mu, dtype=float),
                              r=cur.r, s=cur.s)
        n_in = cur.N
        cur = split_atoms(cur, 2.0 / cur.N)
        n_split = cur.N
        net = build_net(cur, eps[j], seed=round_seed, probe_count=probe_count)
        sizing = choose_delta_k(cur.n, cur.N, K, cur.r, cur.s, eps[j],
                                c_universal)
        # a round is a no-op only when the sampling rate is degenerate
        # (delta >= 1 keeps every atom in expectation, so nothing can shrink)
        if sizing.flagged:
            records.append(RoundRecord(
                round_index=j, noop=True, n_atoms_in=n_in, n_atoms_split=n_split,
                net_size=net.size, net_certified=net.certified, K=K,
                epsilon=eps[j], delta=sizing.delta, k_target=sizing.k_target,
                eta=sizing.eta, trial_seeds=(), k_selected=cur.N,
                distortion=1.0, scale=1.0, passed=True))
            continue
        trial_seeds = []
        trial = None
        for t in range(max_retries):
            t_seed = int(derive_rng(seed, f"round-{j}-trial", t).integers(0, 2 ** 63))
            trial_seeds.append(t_seed)
            trial = select_and_certify(cur, net, sizing.delta, eps[j],
                                       seed=t_seed)
            if trial.passed and trial.k < cur.N:
                break
        if trial is None or not trial.passed or trial.k >= cur.N:
            raise RetriesExhaustedError(
                f"round {j}: no passing selection in {max_retries} trials")
        mask = trial.mask
        mu_sel = cur.mu[mask]
        cur = SampledSubspace(basis=cur.basis[mask], mu=mu_sel / mu_sel.sum(),
                              r=cur.r, s=cur.s)
        records.append(RoundRecord(
            round_index=j, noop=False, n_atoms_in=n_in, n_atoms_split=n_split,
            net_size=net.size, net_certified=net.certified, K=K,
            epsilon=eps[j], delta=sizing.delta, k_target=sizing.k_target,
            eta=sizing.eta, trial_seeds=tuple(trial_seeds),
            k_selected=trial.k, distortion=trial.distortion,
            scale=trial.scale, passed=True))
    return records, cur

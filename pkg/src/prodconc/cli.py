"""Deterministic command-line front end.

Subcommands: verify-theorem1, ledger, deviation, sparsify, iterate.  Every
run reads an optional JSON config, derives all randomness from the single
seed, writes one JSON report (plus CSV curves where applicable) into the
output directory, and exits 0 iff every check passed (1 on check failure,
2 on parse errors, 3 on internal errors).
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import inequality, sparsify
from .deviation import (
    DistanceToPointFn,
    LinearFn,
    MaxAffineFn,
    tail_vs_bound,
)
from .errors import ProdconcError
from .reports import write_curve_csv, write_report
from .rng import derive_rng
from .spaces import bernoulli_cube, space_from_dict
from .sweeps import random_event, random_pairs, random_space

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_INTERNAL_ERROR = 3


class ConfigError(Exception):
    """Config file missing, unreadable, or structurally invalid."""


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _build_space(spec):
    if not isinstance(spec, dict):
        raise ConfigError("space spec must be an object")
    if spec.get("kind") == "bernoulli_cube":
        try:
            return bernoulli_cube(int(spec["n"]), float(spec["eta"]))
        except KeyError as exc:
            raise ConfigError(f"bernoulli_cube spec missing {exc}") from exc
    try:
        return space_from_dict(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad space spec: {exc}") from exc


def _build_function(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("function spec needs a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "linear":
            return LinearFn(coeffs=tuple(spec["coeffs"]))
        if kind == "distance":
            return DistanceToPointFn(reference=tuple(spec["reference"]))
        if kind == "max_affine":
            return MaxAffineFn(pieces=tuple(
                (tuple(coeffs), float(b)) for coeffs, b in spec["pieces"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad function spec: {exc}") from exc
    raise ConfigError(f"unknown function kind: {kind}")


def _build_subspace(spec, seed):
    if isinstance(spec, str):
        if not os.path.exists(spec):
            raise ConfigError(f"subspace file not found: {spec}")
        try:
            return sparsify.load_subspace(spec)
        except (json.JSONDecodeError, KeyError, ValueError, ProdconcError) as exc:
            raise ConfigError(f"bad subspace file {spec}: {exc}") from exc
    if isinstance(spec, dict) and "gaussian" in spec:
        g = spec["gaussian"]
        try:
            n, N = int(g["n"]), int(g["N"])
            r, s = float(g["r"]), float(g["s"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad gaussian subspace spec: {exc}") from exc
        rng = derive_rng(seed, "subspace")
        basis = rng.standard_normal((N, n))
        return sparsify.SampledSubspace(basis=basis, mu=np.full(N, 1.0 / N),
                                        r=r, s=s)
    if isinstance(spec, dict):
        try:
            return sparsify.subspace_from_dict(spec)
        except (KeyError, TypeError, ValueError, ProdconcError) as exc:
            raise ConfigError(f"bad subspace spec: {exc}") from exc
    raise ConfigError("subspace spec must be a path or an object")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_verify_theorem1(config, seed, out_dir):
    tol = float(config.get("tol", 1e-4))
    rows = []
    if "space" in config:
        space = _build_space(config["space"])
        count = int(config.get("events", 50))
        pairs = []
        for i in range(count):
            rng = derive_rng(seed, "event", i)
            pairs.append((space, random_event(rng, space)))
    else:
        count = int(config.get("pairs", 20))
        kwargs = {k: config[k] for k in
                  ("min_blocks", "max_blocks", "max_points", "max_dim",
                   "outer_p") if k in config}
        pairs = random_pairs(seed, count, **kwargs)
    for i, (space, event) in enumerate(pairs):
        rep = inequality.theorem1_verify(space, event, tol=tol)
        rows.append({
            "index": i,
            "event_size": len(event),
            "event_probability": rep.event_probability,
            "expectation": rep.expectation,
            "bound": rep.bound,
            "margin": rep.margin,
            "gap_budget": rep.gap_budget,
            "non_certified": rep.non_certified,
            "passed": rep.passed,
        })
    passed = all(r["passed"] for r in rows)
    return {"checks": rows, "passed": passed}, "theorem1.json", None


def _cmd_ledger(config, seed, out_dir):
    base_grid = int(config.get("base_grid", 100_001))
    claim_grid = int(config.get("claim_grid", 10_000))
    ineq7_grid = int(config.get("ineq7_grid", 1_000))
    slice_count = int(config.get("slices", 0))
    base_tol = float(config.get("base_tol", 1e-9))
    scan_tol = float(config.get("scan_tol", 1e-12))
    slice_tol = float(config.get("slice_tol", 1e-6))

    rows = []
    base = inequality.base_case_scan(base_grid)
    rows.append({"name": "base_case_max", "value": base.maximum,
                 "argmax": base.argmax,
                 "passed": abs(base.maximum - 1.0) <= base_tol})
    claim = inequality.claim_scan(claim_grid)
    rows.append({"name": "claim_max_violation", "value": claim.maximum,
                 "argmax": claim.argmax, "passed": claim.maximum <= scan_tol})
    rows.append({"name": "claim_equality_at_one", "value": claim.f_at_one,
                 "passed": abs(claim.f_at_one) <= scan_tol})
    rows.append({"name": "claim_stationary_at_one",
                 "value": claim.fprime_at_one,
                 "passed": abs(claim.fprime_at_one) <= 1e-6})
    ineq7 = inequality.ineq7_scan(ineq7_grid)
    rows.append({"name": "ineq7_max_violation", "value": ineq7.maximum,
                 "argmax": list(ineq7.argmax),
                 "passed": ineq7.maximum <= scan_tol})
    for i in range(slice_count):
        rng = derive_rng(seed, "ledger-slice", i)
        space = random_space(rng, min_blocks=3, max_blocks=3, max_points=2,
                             max_dim=2)
        event = random_event(rng, space)
        rep = inequality.slice_inequalities_check(space, event, tol=slice_tol)
        rows.append({"name": f"slice_check_{i}",
                     "value": max(rep.max_violation_eq1,
                                  rep.max_violation_eq2),
                     "checked": rep.checked, "passed": rep.passed})
    passed = all(r["passed"] for r in rows)
    return {"checks": rows, "passed": passed}, "ledger.json", None


def _cmd_deviation(config, seed, out_dir):
    if "space" not in config or "function" not in config:
        raise ConfigError("deviation needs 'space' and 'function'")
    space = _build_space(config["space"])
    fn = _build_function(config["function"])
    c_grid = config.get("c_grid")
    if not c_grid:
        raise ConfigError("deviation needs a nonempty 'c_grid'")
    center = str(config.get("center", "median"))
    mc_trials = int(config.get("mc_trials", 0))
    try:
        rep = tail_vs_bound(space, fn, c_grid, center_kind=center,
                            mc_trials=mc_trials, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [{"c": c, "tail": t, "bound": b, "violated": v}
            for c, t, b, v in zip(rep.c_grid, rep.tails, rep.bounds,
                                  rep.violated)]
    payload = {
        "sigma_p": rep.sigma_p, "median": rep.median, "mean": rep.mean,
        "center_kind": rep.center_kind, "center": rep.center,
        "mc_trials": rep.mc_trials, "checks": rows, "passed": rep.passed,
    }
    curve = ("deviation_curve.csv", ["c", "tail", "bound", "violated"],
             [(r["c"], r["tail"], r["bound"], r["violated"]) for r in rows])
    return payload, "deviation.json", curve


def _cmd_sparsify(config, seed, out_dir):
    if "subspace" not in config:
        raise ConfigError("sparsify needs a 'subspace'")
    sub = _build_subspace(config["subspace"], seed)
    epsilon = float(config.get("epsilon", 0.25))
    trials = int(config.get("trials", 100))
    probe_count = int(config.get("probe_count", 10_000))
    k_budget = int(config.get("k_budget", 256))
    c_spec = config.get("c_universal", [1.0, 2.0, 4.0, 8.0])
    escalate = ([float(c) for c in c_spec] if isinstance(c_spec, list)
                else [float(c_spec)])

    sub = sparsify.split_atoms(sub, 2.0 / sub.N)
    K = sparsify.estimate_K(sub, budget=k_budget, seed=seed)
    net = sparsify.build_net(sub, epsilon, seed=seed, probe_count=probe_count)

    attempts = []
    selected_c = None
    for c in escalate:
        sizing = sparsify.choose_delta_k(sub.n, sub.N, K, sub.r, sub.s,
                                         epsilon, c)
        rows = []
        n_pass = 0
        if not sizing.flagged:
            for t in range(trials):
                t_seed = int(derive_rng(seed, "trial", t).integers(0, 2 ** 63))
                trial = sparsify.select_and_certify(sub, net, sizing.delta,
                                                    epsilon, seed=t_seed)
                rows.append({"seed": trial.seed, "k": trial.k,
                             "distortion": trial.distortion,
                             "passed": trial.passed})
                n_pass += trial.passed
        rate = n_pass / trials if trials else 0.0
        attempts.append({
            "c_universal": c, "delta": sizing.delta,
            "k_target": sizing.k_target, "eta": sizing.eta,
            "flagged": sizing.flagged, "pass_rate": rate, "trials": rows,
        })
        if rate >= 0.5:
            selected_c = c
            break
    payload = {
        "K": K, "epsilon": epsilon, "N": sub.N, "n": sub.n,
        "net_size": net.size, "net_certified": net.certified,
        "c_universal_selected": selected_c, "attempts": attempts,
        "passed": selected_c is not None,
    }
    return payload, "sparsify.json", None


def _cmd_iterate(config, seed, out_dir):
    if "subspace" not in config:
        raise ConfigError("iterate needs a 'subspace'")
    sub = _build_subspace(config["subspace"], seed)
    rounds = int(config.get("rounds", 3))
    eps = config.get("epsilon", 0.25)
    eps = [float(e) for e in eps] if isinstance(eps, list) else [float(eps)]
    c_universal = float(config.get("c_universal", 1.0))
    probe_count = int(config.get("probe_count", 10_000))
    k_budget = int(config.get("k_budget", 256))
    provider = sparsify.uniform_density_provider(k_budget=k_budget)
    records, final = sparsify.iterate_embedding(
        sub, rounds, eps, provider, c_universal=c_universal, seed=seed,
        probe_count=probe_count)
    rows = [asdict(r) for r in records]
    cum = float(np.prod([r.distortion for r in records]))
    payload = {
        "rounds": rows, "final_N": final.N,
        "cumulative_distortion": cum,
        "passed": all(r.passed for r in records),
    }
    curve = ("iterate_rounds.csv", ["round", "N", "k", "distortion"],
             [(r.round_index, r.n_atoms_split, r.k_selected, r.distortion)
              for r in records])
    return payload, "iterate.json", curve


_COMMANDS = {
    "verify-theorem1": _cmd_verify_theorem1,
    "ledger": _cmd_ledger,
    "deviation": _cmd_deviation,
    "sparsify": _cmd_sparsify,
    "iterate": _cmd_iterate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prodconc",
        description="Concentration checks and L_r subspace sparsification.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="master seed (overrides config)")
        cmd.add_argument("--out", default=".", help="output directory")
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE_ERROR if exc.code not in (0, None) else 0

    try:
        config = _load_config(args.config)
        seed = int(args.seed if args.seed is not None
                   else config.get("seed", 0))
        if seed < 0:
            raise ConfigError("seed must be nonnegative")
        os.makedirs(args.out, exist_ok=True)
        payload, report_name, curve = _COMMANDS[args.command](
            config, seed, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR

    resolved = dict(config)
    resolved["seed"] = seed
    payload = dict(payload)
    payload["command"] = args.command
    payload["config"] = resolved
    report_path = os.path.join(args.out, report_name)
    write_report(report_path, payload)
    if curve is not None:
        name, header, rows = curve
        write_curve_csv(os.path.join(args.out, name), header, rows)
    status = "pass" if payload["passed"] else "FAIL"
    print(f"{args.command}: {status} (report: {report_path})")
    return EXIT_PASS if payload["passed"] else EXIT_CHECK_FAILED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

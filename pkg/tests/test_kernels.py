import numpy as np
import pytest

from prodconc._kernels import BACKEND, fallback
from prodconc.rng import derive_rng

_fwcore = pytest.importorskip("prodconc._kernels._fwcore")

TOL = 1e-7


def random_instance(rng, m=12, blocks=3, dim=2, mixed=True):
    S = rng.standard_normal((m, blocks * dim))
    t = rng.standard_normal(blocks * dim) * 1.5
    offsets = np.arange(0, (blocks + 1) * dim, dim, dtype=np.int64)
    if mixed:
        codes = rng.integers(0, 3, size=blocks).astype(np.int32)
    else:
        codes = np.ones(blocks, dtype=np.int32)
    return S, t, offsets, codes


def test_backend_selected():
    assert BACKEND in ("cython", "python")


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_fw_backend_parity(p):
    # both backends certify and agree on the optimum within tolerance
    # (bitwise trajectories may differ through libm vs numpy rounding)
    for i in range(15):
        rng = derive_rng(1234, "kernel-parity", i)
        S, t, offsets, codes = random_instance(rng, mixed=False)
        out_py = fallback.solve_simplex_fw(S, t, offsets, codes, p, TOL,
                                           20_000)
        out_cy = _fwcore.solve_simplex_fw(S, t, offsets, codes, p, TOL,
                                          20_000)
        # the tolerance contract is on the p-th root of the objective
        for out in (out_py, out_cy):
            assert out[1] ** (1 / p) - max(out[2], 0.0) ** (1 / p) <= TOL
        assert abs(out_py[1] ** (1 / p) - out_cy[1] ** (1 / p)) <= 2 * TOL


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_smoothed_backend_parity(p):
    for i in range(10):
        rng = derive_rng(5678, "kernel-parity-sm", i)
        S, t, offsets, codes = random_instance(rng, mixed=True)
        out_py = fallback.solve_simplex_fw_smoothed(S, t, offsets, codes, p,
                                                    TOL, 4_000)
        out_cy = _fwcore.solve_simplex_fw_smoothed(S, t, offsets, codes, p,
                                                   TOL, 4_000)
        # agreement within whatever gap the budget left open
        gap_py = out_py[1] - out_py[2]
        gap_cy = out_cy[1] - out_cy[2]
        slack = max(gap_py, gap_cy, TOL)
        assert abs(out_py[1] - out_cy[1]) <= 2 * slack


def test_bounds_bracket_objective():
    # lower bound never exceeds the feasible value, in both backends
    for i in range(10):
        rng = derive_rng(42, "kernel-bracket", i)
        S, t, offsets, codes = random_instance(rng, mixed=True)
        for solver in (fallback.solve_simplex_fw_smoothed,
                       _fwcore.solve_simplex_fw_smoothed):
            lam, g_up, g_lo, _ = solver(S, t, offsets, codes, 2.0, 1e-6,
                                        5_000)
            assert g_lo <= g_up + 1e-12
            assert lam.min() >= -1e-12
            assert lam.sum() == pytest.approx(1.0, abs=1e-9)


def test_pure_python_env_var_selects_fallback():
    import subprocess
    import sys

    code = "import prodconc; print(prodconc.KERNEL_BACKEND)"
    out = subprocess.run([sys.executable, "-c", code],
                         env={"PRODCONC_PURE_PYTHON": "1", "PATH": "/usr/bin"},
                         capture_output=True, text=True)
    assert out.stdout.strip() == "python"

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wegnerlab import kernels
from wegnerlab.density import DensitySpec
from wegnerlab.kernels import KERNELS

seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds, st.integers(1, 30))
def test_tridiagonalize_variants_agree(seed, n):
    m = np.random.default_rng(seed).normal(size=(n, n))
    m = np.ascontiguousarray(m + m.T)
    nb, npy = KERNELS["tridiagonalize"]
    d1, e1 = nb(m)
    d2, e2 = npy(m)
    assert np.allclose(d1, d2, atol=1e-12) and np.allclose(np.abs(e1), np.abs(e2), atol=1e-12)


@given(seeds, st.integers(1, 30))
def test_tridiagonal_similarity(seed, n):
    m = np.random.default_rng(seed).normal(size=(n, n))
    m = np.ascontiguousarray(m + m.T)
    d, e = kernels.tridiagonalize(m)
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(np.linalg.eigvalsh(t), np.linalg.eigvalsh(m), atol=1e-10)


@given(seeds, st.integers(1, 40))
def test_ql_variants_agree(seed, n):
    rng = np.random.default_rng(seed)
    d, e = rng.normal(size=n), rng.normal(size=max(n - 1, 0))
    nb, npy = KERNELS["tql_eigenvalues"]
    v1, ok1 = nb(d, e)
    v2, ok2 = npy(d, e)
    assert ok1 and ok2 and np.allclose(v1, v2, atol=1e-12)
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(v1, np.linalg.eigvalsh(t), atol=1e-10)


def test_ql_inputs_untouched():
    d, e = np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.5])
    kernels.tql_eigenvalues(d, e)
    assert d.tolist() == [1.0, 2.0, 3.0] and e.tolist() == [0.5, 0.5]


@given(seeds, st.integers(3, 7), st.integers(1, 2))
def test_potential_variants_agree(seed, l, dim):
    rng = np.random.default_rng(seed)
    omega = rng.random(l ** dim)
    offsets = rng.integers(-3, 4, size=(4, dim)).astype(np.int64)
    coeffs = rng.normal(size=4)
    nb, npy = KERNELS["periodic_potential"]
    assert np.allclose(nb(omega, l, dim, offsets, coeffs), npy(omega, l, dim, offsets, coeffs),
                       atol=1e-14)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_quantile_variants_agree(us):
    f = DensitySpec([(0.0, 0.5, [0.0, 4.0]), (0.5, 1.0, [4.0, -4.0]), (1.5, 2.0, [0.0])])
    u = np.array(us)
    nb, npy = KERNELS["bisect_quantiles"]
    args = (f._lo, f._hi, f._cdf_lo, f._anti, 64)
    assert np.allclose(nb(u, *args), npy(u, *args), atol=1e-13)


@pytest.mark.parametrize("flag,expected", [("1", "False"), ("", "True")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, WEGNERLAB_DISABLE_NUMBA=flag)
    code = ("import numpy as np, wegnerlab\n"
            "from wegnerlab.anderson import build_free_hamiltonian, eigenvalues\n"
            "ev = eigenvalues(build_free_hamiltonian(8, 1))\n"
            "assert np.allclose(ev, np.sort(2*np.cos(2*np.pi*np.arange(8)/8)))\n"
            "print(wegnerlab.NUMBA_ENABLED)\n")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == expected

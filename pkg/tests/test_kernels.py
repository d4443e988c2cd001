"""The numba and numpy paths must agree bit for bit, including argmin tie-breaking."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkam import _accel, kernels

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

sizes = st.tuples(st.integers(1, 4), st.integers(5, 20), st.integers(1, 2))


def _cost(rng, n, M, ties):
    c = rng.uniform(0, 1, (n, 2 * M + 1))
    if ties:
        c = np.round(c * 4) / 4  # many exact ties
    return c


@settings(max_examples=40, deadline=None)
@given(shape=sizes, seed=st.integers(0, 2**32 - 1), ties=st.booleans())
def test_push_rows_identical(shape, seed, ties):
    r, n, M = shape
    rng = np.random.default_rng(seed)
    U = rng.uniform(-1, 1, (r, n))
    if ties:
        U = np.round(U * 2) / 2
    c = _cost(rng, n, M, ties)
    a, ia = kernels.push_rows_numba(U, c, M)
    b, ib = kernels.push_rows_numpy(U, c, M)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(ia, ib)


@settings(max_examples=40, deadline=None)
@given(shape=sizes, seed=st.integers(0, 2**32 - 1), ties=st.booleans())
def test_pull_rows_identical(shape, seed, ties):
    r, n, M = shape
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, r))
    if ties:
        X = np.round(X * 2) / 2
    c = _cost(rng, n, M, ties)
    a, ia = kernels.pull_rows_numba(X, c, M)
    b, ib = kernels.pull_rows_numpy(X, c, M)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(ia, ib)


@pytest.mark.parametrize("n", [1, 5, 17])
def test_minplus_matmul_identical(n, rng):
    A, B = rng.uniform(-1, 1, (n, n + 2)), rng.uniform(-1, 1, (n + 2, n))
    np.testing.assert_array_equal(kernels.minplus_matmul_numba(A, B), kernels.minplus_matmul_numpy(A, B))


def test_minplus_matmul_definition(rng):
    A, B = rng.uniform(-1, 1, (6, 4)), rng.uniform(-1, 1, (4, 5))
    ref = np.array([[min(A[i, k] + B[k, j] for k in range(4)) for j in range(5)] for i in range(6)])
    np.testing.assert_allclose(kernels.minplus_matmul(A, B), ref, atol=0)


@pytest.mark.parametrize("n", [2, 9])
def test_karp_table_identical(n, rng):
    K = rng.uniform(-1, 1, (n, n))
    np.testing.assert_array_equal(kernels.karp_table_numba(K), kernels.karp_table_numpy(K))


@pytest.mark.parametrize("x, n", [(1, 6), (3, 10), (7, 4)])
def test_via_mask_identical(x, n, rng):
    Hin, Hout, Hm = rng.uniform(-1, 1, (x, n)), rng.uniform(-1, 1, (n, x)), rng.uniform(-1, 1, (x, x))
    a = kernels.via_mask_numba(Hin, Hout, Hm)
    b = kernels.via_mask_numpy(Hin, Hout, Hm)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
    ref = np.array([min(Hin[i, j] + Hout[j, z] - Hm[i, z] for i in range(x) for z in range(x)) for j in range(n)])
    np.testing.assert_allclose(b, ref, rtol=0, atol=1e-15)


def test_vecmat(rng):
    u, K = rng.uniform(-1, 1, 7), rng.uniform(-1, 1, (7, 7))
    np.testing.assert_array_equal(kernels.minplus_vecmat(u, K), np.min(u[:, None] + K, axis=0))


def test_env_flag_selects_numpy_path():
    code = "from wkam import _accel, kernels; print(_accel.backend_name(), kernels.USE_NUMBA)"
    env = dict(os.environ, WKAM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]


def test_backends_give_identical_period_map(tmp_path):
    """A whole period of the pendulum operator is identical under both backends."""
    code = (
        "import numpy as np, sys\n"
        "from wkam import hamiltonian as hm\n"
        "from wkam.grid import TorusGrid\n"
        "from wkam.lax_oleinik import LaxOleinik\n"
        "op = LaxOleinik(hm.forced_pendulum(), TorusGrid(32, 8))\n"
        "u = np.cos(2 * np.pi * TorusGrid(32, 8).q)\n"
        "np.save(sys.argv[1], op.period_map(u))\n"
    )
    res = []
    for flag in ("0", "1"):
        path = tmp_path / f"out{flag}.npy"
        env = dict(os.environ, WKAM_DISABLE_NUMBA=flag)
        subprocess.run([sys.executable, "-c", code, str(path)], env=env, check=True)
        res.append(np.load(path))
    np.testing.assert_array_equal(res[0], res[1])

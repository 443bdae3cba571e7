import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmps import kernels
from fmps.grid import make_grid


def _complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(2, 30), st.integers(1, 5), st.integers(0, 2**31))
def test_node_slopes_variants_agree(pre, n, post, seed):
    f = _complex(np.random.default_rng(seed), (pre, n, post))
    inv = kernels._thomas_coefficients(max(n - 2, 0))
    a, b = np.empty_like(f), np.empty_like(f)
    kernels._node_slopes_numpy(f, inv, a)
    kernels._node_slopes_jit(f, inv, b)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_node_slopes_solve_the_tridiagonal_system():
    f = np.random.default_rng(0).normal(size=40)
    m = kernels.clamped_node_slopes(f)
    assert m[0] == 0 and m[-1] == 0
    lhs = m[:-2] + 4 * m[1:-1] + m[2:]
    assert np.allclose(lhs, 3 * (f[2:] - f[:-2]))


def test_node_slopes_along_any_axis():
    f = np.random.default_rng(1).normal(size=(6, 9, 4))
    ref = np.moveaxis(kernels.clamped_node_slopes(np.moveaxis(f, 1, 0)), 0, 1)
    assert np.allclose(kernels.clamped_node_slopes(f, axis=1), ref)
    with pytest.raises(ValueError):
        kernels.clamped_node_slopes(f, axis=1, out=np.empty((6, 9, 4), dtype=complex))


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 40), st.integers(0, 2**31))
def test_eval_1d_variants_agree(n, seed):
    rng = np.random.default_rng(seed)
    g = make_grid((-2, 3), n)
    f = _complex(rng, (n, 3))
    hm = kernels.clamped_node_slopes(f)
    i, u, inside = kernels.locate(rng.uniform(-3, 4, size=60), g.lo, g.h, n)
    for deriv in (False, True):
        a = kernels._eval_1d_numpy(f, hm, i, u, inside, deriv)
        b = kernels._eval_1d_jit(f, hm, i, u, inside, deriv)
        assert np.allclose(a, b, rtol=0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(4, 20), st.integers(4, 20), st.integers(0, 2**31))
def test_eval_2d_variants_agree(n1, n2, seed):
    rng = np.random.default_rng(seed)
    vals = _complex(rng, (n1, n2, 2))
    table = np.empty((4, n1, n2, 2), dtype=complex)
    table[0] = vals
    kernels.clamped_node_slopes(vals, 0, out=table[1])
    kernels.clamped_node_slopes(vals, 1, out=table[2])
    kernels.clamped_node_slopes(table[1], 1, out=table[3])
    i, u, a_in = kernels.locate(rng.uniform(-0.2, 1.2, 80), 0.0, 1 / (n1 - 1), n1)
    j, v, b_in = kernels.locate(rng.uniform(-0.2, 1.2, 80), 0.0, 1 / (n2 - 1), n2)
    a = kernels._eval_2d_numpy(table, i, u, j, v, a_in & b_in)
    b = kernels._eval_2d_jit(table, i, u, j, v, a_in & b_in)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_eval_2d_reproduces_nodes():
    rng = np.random.default_rng(3)
    vals = _complex(rng, (7, 5, 1))
    table = np.zeros((4, 7, 5, 1), dtype=complex)
    table[0] = vals
    ii, jj = np.meshgrid(np.arange(7), np.arange(5), indexing="ij")
    i, u, a = kernels.locate(ii.ravel() / 6, 0.0, 1 / 6, 7)
    j, v, b = kernels.locate(jj.ravel() / 4, 0.0, 1 / 4, 5)
    out = kernels.eval_2d(table, i, u, j, v, a & b)
    assert np.array_equal(out.reshape(7, 5, 1), vals)


def test_propagator_variants_agree():
    g = make_grid((-4, 4), 50)
    new = make_grid((-3, 5), 40)
    for phi in (0.8, -1.3, 2.2):
        a = kernels._propagator_numpy(new.points, g.points, g.weights, phi)
        b = kernels._propagator_jit(new.points, g.points, g.weights, phi)
        assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_env_flag_selects_numpy_variants():
    code = ("from fmps import kernels; "
            "print(kernels.USE_NUMBA, kernels.eval_2d is kernels._eval_2d_numpy)")
    env = dict(os.environ, FMPS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["False", "True"]

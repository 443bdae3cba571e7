"""Hot numerical kernels.

Every kernel here has a vectorised numpy implementation and a loop
implementation compiled with numba. The module-level names pick one of the
two according to :data:`fmps._accel.USE_NUMBA`; both variants stay importable
so tests and ``benchmarks/bench_kernels.py`` can compare them directly.

Splines are stored in cubic Hermite form: node values plus node derivatives
pre-multiplied by the grid spacing. Evaluating exactly on a node then returns
the stored sample bit-for-bit, since all other basis weights vanish exactly.
"""
from functools import lru_cache

import numpy as np

from ._accel import USE_NUMBA, njit

# Queries this far outside the grid (in units of the spacing) still count as
# inside; queries this close to a node are snapped onto it.
EDGE_TOL = 1e-9
SNAP_TOL = 1e-9
_CHUNK = 1 << 15


@lru_cache(maxsize=64)
def _thomas_coefficients(k):
    """Forward-sweep factors of the ``[1, 4, 1]`` tridiagonal system of size ``k``."""
    inv = np.empty(max(k, 1))
    inv[0] = 0.25
    for i in range(1, k):
        inv[i] = 1.0 / (4.0 - inv[i - 1])
    inv.flags.writeable = False
    return inv


def _node_slopes_numpy(f, inv, out):
    n = f.shape[1]
    out[:, 0] = 0.0
    out[:, n - 1] = 0.0
    if n <= 2:
        return
    x = out[:, 1:-1]
    x[:, 0] = 3.0 * (f[:, 2] - f[:, 0]) * inv[0]
    for i in range(1, n - 2):
        x[:, i] = (3.0 * (f[:, i + 2] - f[:, i]) - x[:, i - 1]) * inv[i]
    for i in range(n - 4, -1, -1):
        x[:, i] -= inv[i] * x[:, i + 1]


@njit
def _node_slopes_jit(f, inv, out):
    pre, n, post = f.shape
    for a in range(pre):
        for s in range(post):
            out[a, 0, s] = 0.0
            out[a, n - 1, s] = 0.0
        if n <= 2:
            continue
        for s in range(post):
            out[a, 1, s] = 3.0 * (f[a, 2, s] - f[a, 0, s]) * inv[0]
        for i in range(2, n - 1):
            c = inv[i - 1]
            for s in range(post):
                out[a, i, s] = (3.0 * (f[a, i + 1, s] - f[a, i - 1, s]) - out[a, i - 1, s]) * c
        for i in range(n - 3, 0, -1):
            c = inv[i - 1]
            for s in range(post):
                out[a, i, s] -= c * out[a, i + 1, s]


def clamped_node_slopes(values, axis=0, out=None):
    """Node derivatives of the clamped cubic spline along ``axis``.

    The spline has zero first derivative at both ends. Returns ``h * f'(q_k)``
    with the same shape as ``values``. The interior system
    ``m[k-1] + 4 m[k] + m[k+1] = 3 (f[k+1] - f[k-1])`` is written for
    ``h * m`` directly, so the spacing never appears. It is solved by a
    Thomas sweep over contiguous ``(pre, n, post)`` slabs, so no axis is
    ever moved. ``out`` must be C-contiguous with the shape of ``values``.
    """
    v = np.asarray(values)
    dtype = np.result_type(v.dtype, np.float64)
    v = np.ascontiguousarray(v, dtype=dtype)
    axis = axis % v.ndim
    n = v.shape[axis]
    pre = int(np.prod(v.shape[:axis], dtype=np.int64))
    post = int(np.prod(v.shape[axis + 1:], dtype=np.int64))
    if out is None:
        out = np.empty(v.shape, dtype=dtype)
    elif out.shape != v.shape or out.dtype != dtype or not out.flags.c_contiguous:
        raise ValueError("out must be C-contiguous with the input's shape and dtype")
    node_slopes(v.reshape(pre, n, post), _thomas_coefficients(n - 2), out.reshape(pre, n, post))
    return out


def locate(x, lo, h, n):
    """Cell index, local coordinate and inside-mask for queries ``x``."""
    t = snap((np.asarray(x, dtype=np.float64) - lo) / h)
    inside = (t >= -EDGE_TOL) & (t <= (n - 1) + EDGE_TOL)
    t = np.clip(t, 0.0, n - 1.0)
    i = np.minimum(np.floor(t).astype(np.int64), n - 2)
    u = t - i
    return i, u, inside


def snap(t):
    """Round grid coordinates lying within ``SNAP_TOL`` of an integer."""
    r = np.rint(t)
    return np.where(np.abs(t - r) <= SNAP_TOL, r, t)


def hermite_weights(u):
    u2 = u * u
    u3 = u2 * u
    return (2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2)


def hermite_slopes(u):
    u2 = u * u
    return (6 * u2 - 6 * u, 3 * u2 - 4 * u + 1, -6 * u2 + 6 * u, 3 * u2 - 2 * u)


# ---------------------------------------------------------------------------
# 1-D evaluation: f, hm have shape (N, S); returns (P, S)


def _eval_1d_numpy(f, hm, i, u, inside, deriv):
    w = hermite_slopes(u) if deriv else hermite_weights(u)
    out = (
        w[0][:, None] * f[i]
        + w[1][:, None] * hm[i]
        + w[2][:, None] * f[i + 1]
        + w[3][:, None] * hm[i + 1]
    )
    out[~inside] = 0
    return out


@njit
def _eval_1d_jit(f, hm, i, u, inside, deriv):
    npts = i.shape[0]
    ns = f.shape[1]
    out = np.zeros((npts, ns), dtype=f.dtype)
    for p in range(npts):
        if not inside[p]:
            continue
        x = u[p]
        x2 = x * x
        x3 = x2 * x
        if deriv:
            a0 = 6 * x2 - 6 * x
            a1 = 3 * x2 - 4 * x + 1
            a2 = -6 * x2 + 6 * x
            a3 = 3 * x2 - 2 * x
        else:
            a0 = 2 * x3 - 3 * x2 + 1
            a1 = x3 - 2 * x2 + x
            a2 = -2 * x3 + 3 * x2
            a3 = x3 - x2
        k = i[p]
        for s in range(ns):
            out[p, s] = a0 * f[k, s] + a1 * hm[k, s] + a2 * f[k + 1, s] + a3 * hm[k + 1, s]
    return out


# ---------------------------------------------------------------------------
# 2-D evaluation: table has shape (4, N1, N2, S) holding
# [f, h1*df/dx, h2*df/dy, h1*h2*d2f/dxdy]; returns (P, S)


def _eval_2d_numpy(table, i, u, j, v, inside):
    npts = i.shape[0]
    out = np.zeros((npts, table.shape[3]), dtype=table.dtype)
    for start in range(0, npts, _CHUNK):
        sl = slice(start, start + _CHUNK)
        ii, jj = i[sl], j[sl]
        wu = hermite_weights(u[sl])
        wv = hermite_weights(v[sl])
        # value weights at offsets 0/1 are entries 0/2, slope weights 1/3
        val_u, der_u = (wu[0], wu[2]), (wu[1], wu[3])
        val_v, der_v = (wv[0], wv[2]), (wv[1], wv[3])
        acc = out[sl]
        for a in (0, 1):
            for b in (0, 1):
                ia, jb = ii + a, jj + b
                acc += (val_u[a] * val_v[b])[:, None] * table[0, ia, jb]
                acc += (der_u[a] * val_v[b])[:, None] * table[1, ia, jb]
                acc += (val_u[a] * der_v[b])[:, None] * table[2, ia, jb]
                acc += (der_u[a] * der_v[b])[:, None] * table[3, ia, jb]
        acc[~inside[sl]] = 0
    return out


@njit
def _eval_2d_jit(table, i, u, j, v, inside):
    npts = i.shape[0]
    ns = table.shape[3]
    out = np.zeros((npts, ns), dtype=table.dtype)
    wu = np.empty(4)
    wv = np.empty(4)
    for p in range(npts):
        if not inside[p]:
            continue
        x = u[p]
        x2 = x * x
        x3 = x2 * x
        wu[0] = 2 * x3 - 3 * x2 + 1
        wu[1] = x3 - 2 * x2 + x
        wu[2] = -2 * x3 + 3 * x2
        wu[3] = x3 - x2
        y = v[p]
        y2 = y * y
        y3 = y2 * y
        wv[0] = 2 * y3 - 3 * y2 + 1
        wv[1] = y3 - 2 * y2 + y
        wv[2] = -2 * y3 + 3 * y2
        wv[3] = y3 - y2
        i0 = i[p]
        j0 = j[p]
        for a in range(2):
            for b in range(2):
                ia = i0 + a
                jb = j0 + b
                c0 = wu[2 * a] * wv[2 * b]
                c1 = wu[2 * a + 1] * wv[2 * b]
                c2 = wu[2 * a] * wv[2 * b + 1]
                c3 = wu[2 * a + 1] * wv[2 * b + 1]
                for s in range(ns):
                    out[p, s] += (
                        c0 * table[0, ia, jb, s]
                        + c1 * table[1, ia, jb, s]
                        + c2 * table[2, ia, jb, s]
                        + c3 * table[3, ia, jb, s]
                    )
    return out


# ---------------------------------------------------------------------------
# Harmonic-oscillator propagator <q|P(phi)|q'> times quadrature weights.


def _propagator_numpy(q_new, q_old, w_old, phi):
    s = np.sin(phi)
    c = np.cos(phi)
    pref = 1.0 / np.sqrt(2 * np.pi * abs(s))
    qn = q_new[:, None]
    qo = q_old[None, :]
    arg = (0.5 * (qn * qn + qo * qo) * c - qn * qo) / s
    return pref * np.exp(-1j * arg) * w_old[None, :]


@njit
def _propagator_jit(q_new, q_old, w_old, phi):
    s = np.sin(phi)
    c = np.cos(phi)
    pref = 1.0 / np.sqrt(2 * np.pi * abs(s))
    nn = q_new.shape[0]
    no = q_old.shape[0]
    out = np.empty((nn, no), dtype=np.complex128)
    for k in range(nn):
        a = q_new[k]
        for l in range(no):
            b = q_old[l]
            arg = (0.5 * (a * a + b * b) * c - a * b) / s
            out[k, l] = pref * w_old[l] * (np.cos(arg) - 1j * np.sin(arg))
    return out


if USE_NUMBA:
    node_slopes = _node_slopes_jit
    eval_1d = _eval_1d_jit
    eval_2d = _eval_2d_jit
    propagator = _propagator_jit
else:
    node_slopes = _node_slopes_numpy
    eval_1d = _eval_1d_numpy
    eval_2d = _eval_2d_numpy
    propagator = _propagator_numpy

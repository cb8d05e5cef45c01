"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Every public function here dispatches on the active backend (see
``_backend``).  The ``*_np`` implementations are vectorized numpy; the
jitted twins run the same arithmetic in explicit loops with Kahan
accumulation.  Both backends are exercised by the test suite and by
``scripts/benchmark_backends.py``.

The half-plane heat kernel is evaluated through the classical integral
representation, rewritten with ``s = sqrt(r^2 + 4*tau*w)`` so that a
generalized Gauss-Laguerre rule (weight ``w^(-1/2) e^(-w)``) absorbs the
endpoint singularity:

    K(tau, r) = sqrt(2) e^(-tau/4) / (4 pi tau)^(3/2)
                * 2 tau e^(-r^2/(4 tau))
                * int_0^inf w^(-1/2) e^(-w) g(w) dw,
    g(w) = sqrt(w) / sqrt(cosh s - cosh r).
"""

import math

import numpy as np

from ._backend import njit, using_numba

SQRT2 = math.sqrt(2.0)


def _mckean_batch_np(r, tau, nodes, weights):
    r = np.asarray(r, dtype=float)
    rr = r.reshape(-1, 1)
    x = nodes.reshape(1, -1)
    s = np.sqrt(rr * rr + 4.0 * tau * x)
    delta = 4.0 * tau * x / (s + rr)
    # cosh s - cosh r = 2 sinh((s+r)/2) sinh((s-r)/2), with s-r computed
    # cancellation-free through delta
    gap = 2.0 * np.sinh((s + rr) / 2.0) * np.sinh(delta / 2.0)
    g = np.sqrt(x) / np.sqrt(gap)
    integral = g @ weights
    pref = SQRT2 * math.exp(-tau / 4.0) / (4.0 * math.pi * tau) ** 1.5 * 2.0 * tau
    out = pref * np.exp(-rr[:, 0] ** 2 / (4.0 * tau)) * integral
    return out.reshape(r.shape)


def _mckean_batch_impl(r, tau, nodes, weights):
    n = r.shape[0]
    m = nodes.shape[0]
    out = np.empty(n)
    pref = SQRT2 * math.exp(-tau / 4.0) / (4.0 * math.pi * tau) ** 1.5 * 2.0 * tau
    for i in range(n):
        ri = r[i]
        acc = 0.0
        comp = 0.0
        for j in range(m):
            x = nodes[j]
            s = math.sqrt(ri * ri + 4.0 * tau * x)
            delta = 4.0 * tau * x / (s + ri)
            gap = 2.0 * math.sinh((s + ri) / 2.0) * math.sinh(delta / 2.0)
            term = weights[j] * math.sqrt(x) / math.sqrt(gap)
            y = term - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        out[i] = pref * math.exp(-ri * ri / (4.0 * tau)) * acc
    return out


_mckean_batch_nb = njit(_mckean_batch_impl)


def _cusp_diag_batch_np(ys, tau, imax, nodes, weights):
    ys = np.asarray(ys, dtype=float)
    idx = np.arange(imax + 1, dtype=float)
    # distance between lifted points (0, y) and (2 pi i, y)
    d = 2.0 * np.arcsinh(math.pi * idx.reshape(1, -1) / ys.reshape(-1, 1))
    vals = _mckean_batch_np(d.ravel(), tau, nodes, weights).reshape(d.shape)
    return vals[:, 0] + 2.0 * vals[:, 1:].sum(axis=1)


def _cusp_diag_batch_impl(ys, tau, imax, nodes, weights):
    n = ys.shape[0]
    out = np.empty(n)
    d = np.empty(imax + 1)
    for i in range(n):
        for k in range(imax + 1):
            d[k] = 2.0 * math.asinh(math.pi * k / ys[i])
        vals = _mckean_batch_nb(d, tau, nodes, weights)
        acc = vals[0]
        comp = 0.0
        for k in range(1, imax + 1):
            term = 2.0 * vals[k]
            y = term - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        out[i] = acc
    return out


_cusp_diag_batch_nb = njit(_cusp_diag_batch_impl)


def mckean_batch(r, tau, nodes, weights):
    """Half-plane Laplace-Beltrami heat kernel exp(-tau*Delta)(d=r), batched."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if using_numba:
        return _mckean_batch_nb(np.ascontiguousarray(r.ravel()), float(tau),
                                nodes, weights).reshape(r.shape)
    return _mckean_batch_np(r, tau, nodes, weights)


def cusp_diag_batch(ys, tau, imax, nodes, weights):
    """Deck-summed diagonal kernel on the model cusp at heights ``ys``."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if using_numba:
        return _cusp_diag_batch_nb(np.ascontiguousarray(ys.ravel()), float(tau),
                                   int(imax), nodes, weights).reshape(ys.shape)
    return _cusp_diag_batch_np(ys, tau, imax, nodes, weights)

"""Shared smooth cutoff functions.

All cutoffs are built from the single mollifier
S(x) = sig(x) / (sig(x) + sig(1-x)), sig(x) = exp(-1/x) for x > 0,
which has exact plateaus and closed-form first and second derivatives.
Four shapes are exposed:

    psi  : even, 1 on |u| < 1/2, 0 on |u| > 1
    phi  : decreasing, 1 on (-inf, 5/4], 0 on [7/4, inf)
    chi  : increasing, 0 on (-inf, 1/2], 1 on [3/4, inf)
    g    : bump, 1 on [2, 3], 0 outside (1, 4)
"""

import numpy as np

_KINDS = ("psi", "phi", "chi", "g")


def _sig(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _sig_d1(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def _sig_d2(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = np.exp(-1.0 / xp) * (1.0 - 2.0 * xp) / xp**4
    return out


def _mollifier(x, order=0):
    """S(x) with S(x<=0)=0, S(x>=1)=1, or its first/second derivative."""
    x = np.asarray(x, dtype=float)
    a, b = _sig(x), _sig(1.0 - x)
    den = a + b
    den = np.where(den == 0.0, 1.0, den)
    if order == 0:
        return np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, a / den))
    a1, b1 = _sig_d1(x), -_sig_d1(1.0 - x)
    s = a / den
    s1 = (a1 - s * (a1 + b1)) / den
    if order == 1:
        return np.where((x <= 0.0) | (x >= 1.0), 0.0, s1)
    a2, b2 = _sig_d2(x), _sig_d2(1.0 - x)
    s2 = (a2 - 2.0 * s1 * (a1 + b1) - s * (a2 + b2)) / den
    if order == 2:
        return np.where((x <= 0.0) | (x >= 1.0), 0.0, s2)
    raise ValueError("order must be 0, 1 or 2")


def smooth_step(kind, u, order=0):
    """Evaluate one of the shared cutoffs (or its 1st/2nd derivative).

    Accepts scalars or numpy arrays; plateaus are hit exactly.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown step kind {kind!r}")
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)

    if kind == "psi":
        a = np.abs(u_arr)
        # argument of the rising mollifier; 1 at |u|=1/2, 0 at |u|=1
        x = 2.0 * (1.0 - a)
        if order == 0:
            val = _mollifier(x, 0)
        else:
            # chain rule through |u|: d|u|/du = sign(u); dx/d|u| = -2
            val = _mollifier(x, order) * (-2.0 * np.sign(u_arr)) ** order
    elif kind == "phi":
        x = 2.0 * (1.75 - u_arr)
        val = _mollifier(x, order) * (-2.0) ** order
    elif kind == "chi":
        x = 4.0 * (u_arr - 0.5)
        val = _mollifier(x, order) * 4.0**order
    else:  # g
        rise = _mollifier(u_arr - 1.0, order)
        fall = _mollifier(4.0 - u_arr, order) * (-1.0) ** order
        val = np.where(u_arr <= 2.5, rise, fall)

    if scalar:
        return float(val[0])
    return val

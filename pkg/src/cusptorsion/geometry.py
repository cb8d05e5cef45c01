"""Geometry of the hyperbolic half-plane and the model cusp.

Points on the half-plane are (x, y) with y > 0; the model cusp is the
punctured unit disc with the metric |du|^2 / (|u| ln|u|)^2, uniformized by
u = exp(i z) with deck group generated by z -> z + 2 pi.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0.0:
            raise ValueError("half-plane point needs y > 0")


@dataclass(frozen=True)
class CuspPoint:
    u_re: float
    u_im: float

    def __post_init__(self):
        r = math.hypot(self.u_re, self.u_im)
        if not 0.0 < r < 1.0:
            raise ValueError("cusp point needs 0 < |u| < 1")

    @property
    def r(self) -> float:
        return math.hypot(self.u_re, self.u_im)

    @property
    def arg(self) -> float:
        return math.atan2(self.u_im, self.u_re)


def dist_h(z1: HPoint, z2: HPoint) -> float:
    """Hyperbolic distance on the upper half-plane."""
    return dist_h_xy(z1.x, z1.y, z2.x, z2.y)


def dist_h_xy(x1, y1, x2, y2):
    """dist_h on raw coordinates; accepts numpy arrays."""
    dx = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    dy = np.asarray(y1, dtype=float) - np.asarray(y2, dtype=float)
    sy = np.asarray(y1, dtype=float) + np.asarray(y2, dtype=float)
    num = np.sqrt(dx * dx + dy * dy) + np.sqrt(dx * dx + sy * sy)
    out = 2.0 * np.log(num / (2.0 * np.sqrt(np.asarray(y1, dtype=float)
                                            * np.asarray(y2, dtype=float))))
    if np.isscalar(x1) and np.isscalar(x2):
        return float(out)
    return out


def covering_rho(z: HPoint) -> CuspPoint:
    """Covering map z -> exp(i z) from the half-plane to the punctured disc."""
    r = math.exp(-z.y)
    return CuspPoint(r * math.cos(z.x), r * math.sin(z.x))


def lift(u: CuspPoint) -> HPoint:
    """Representative with x in [0, 2 pi) of the covering preimage."""
    r = u.r
    x = math.atan2(u.u_im, u.u_re) % (2.0 * math.pi)
    return HPoint(x, -math.log(r))


def deck_translate(z: HPoint, i: int) -> HPoint:
    return HPoint(z.x + 2.0 * math.pi * i, z.y)


def dist_cusp_radial(r1: float, r2: float) -> float:
    """Distance between circles |u| = r1 and |u| = r2 on the model cusp."""
    if not (0.0 < r1 < 1.0 and 0.0 < r2 < 1.0):
        raise ValueError("radii must lie in (0, 1)")
    return abs(math.log(-math.log(r1)) - math.log(-math.log(r2)))


def rho_weight(u: CuspPoint) -> float:
    """Cusp weight max(1, sqrt(|ln|u||)); ~ inverse square root of inj. radius."""
    return max(1.0, math.sqrt(abs(math.log(u.r))))


def volume_density_cusp(u: CuspPoint) -> float:
    """Riemannian density relative to Lebesgue dx dy on the disc chart."""
    r = u.r
    return 1.0 / (r * math.log(r)) ** 2


def cusp_volume(r_out: float) -> float:
    """Hyperbolic area of the punctured disc of radius r_out."""
    if not 0.0 < r_out < 1.0:
        raise ValueError("r_out must lie in (0, 1)")
    return 2.0 * math.pi / abs(math.log(r_out))


def deck_truncation_bound(z1: HPoint, z2: HPoint, t: float, eps: float) -> int:
    """Smallest I with the certified deck tail below eps.

    The tail of sum_i exp(-d(z1, U^i z2)^2 / t) over |i| > I is dominated,
    via d(z1, U^i z2) >= ln(i^2 / (y1 y2)), by the explicitly summed
    majorant sum 2 exp(-max(0, ln(i^2/(y1 y2)))^2 / t).
    """
    if t <= 0.0 or eps <= 0.0:
        raise ValueError("t and eps must be positive")
    yy = z1.y * z2.y
    i0 = max(1, math.ceil(math.sqrt(yy)))
    terms = []
    i = i0
    while True:
        ell = math.log(i * i / yy)
        if ell <= 0.0:
            term = 2.0
        else:
            term = 2.0 * math.exp(-(ell * ell) / t)
        terms.append(term)
        if ell > 0.0 and term < min(eps, 1.0) * 1e-6:
            break
        i += 1
        if i - i0 > 10_000_000:
            raise RuntimeError("deck tail fails to certify")
    # suffix sums: tail(I) = sum of majorant terms for i > I
    suffix = np.cumsum(terms[::-1])[::-1]
    for k, i_val in enumerate(range(i0, i + 1)):
        if suffix[k] < eps:
            return i_val - 1
    return i

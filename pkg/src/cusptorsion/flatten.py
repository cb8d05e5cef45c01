"""Metric and norm descriptors on cusp charts, and their flattenings.

Descriptors store radial log-profiles relative to the exact cusp model:
a metric chart holds the log-conformal factor lam with
metric = e^(2 lam) * |du|^2/(|u| ln|u|)^2, a norm chart holds
ln || du (x) s/u || directly.  Two flattening families are provided:

* anomaly family: density |u ln|u||^(-2 psi(ln|u|/ln th)), norm
  |ln|u||^(psi(ln|u|/ln th)); Poincare for r >= sqrt(th), Euclidean-flat
  for r <= th, transition band between.  (The defining formula wins over
  the looser textual band placement.)

* tight family: norm |ln th| (ln r/ln th)^(phi(ln r/ln th)) inside the
  chart, metric with the (ln r/ln th)^(2n(1-phi)) band and a flat core of
  density (th^8 |ln th^4|^2)^(-1).  The core interpolation runs in the
  variable s = u^|n| r|ln r| / (th^4 |ln th^4|), which keeps the
  sandwich  g_f (x) ||.||_f^(2n) <= g (x) ||.||^(2n)  valid for every
  n <= 0 (the literal |u|^2/th^8 interpolation argument fails it for
  n < 0 inside the transition annulus).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import profiles
from .steps import smooth_step


def cutoff_integrals():
    """The five band integrals of the psi cutoff over [1/2, 1]."""
    p = lambda u: smooth_step("psi", u)
    p1 = lambda u: smooth_step("psi", u, 1)
    p2 = lambda u: smooth_step("psi", u, 2)
    opts = dict(limit=200, epsabs=1e-12, epsrel=1e-12)
    return {
        "psi_prime": quad(p1, 0.5, 1.0, **opts)[0],
        "u_psi_second": quad(lambda u: u * p2(u), 0.5, 1.0, **opts)[0],
        "psi_prime_psi": quad(lambda u: p1(u) * p(u), 0.5, 1.0, **opts)[0],
        "u_psi_second_psi_plus_u_psi_prime_sq": quad(
            lambda u: u * p2(u) * p(u) + u * p1(u) ** 2, 0.5, 1.0, **opts)[0],
        "u_sq_psi_prime_psi_second_plus_u_psi_prime_sq": quad(
            lambda u: u * u * p1(u) * p2(u) + u * p1(u) ** 2, 0.5, 1.0, **opts)[0],
    }


def combined_band_integral():
    """int (-psi' + psi'psi + u psi'^2 - u psi''/2 + u psi'' psi/2
    + u^2 psi' psi''/2) du; equals 1/4 for any admissible cutoff."""
    p = lambda u: smooth_step("psi", u)
    p1 = lambda u: smooth_step("psi", u, 1)
    p2 = lambda u: smooth_step("psi", u, 2)
    f = lambda u: (-p1(u) + p1(u) * p(u) + u * p1(u) ** 2
                   - u * p2(u) / 2.0 + u * p2(u) * p(u) / 2.0
                   + u * u * p1(u) * p2(u) / 2.0)
    return quad(f, 0.5, 1.0, limit=200, epsabs=1e-12, epsrel=1e-12)[0]


@dataclass(frozen=True)
class ChartProfile:
    """One cusp chart: an id, outer radius, and radial log-profiles."""
    chart_id: str
    radius: float
    log_conformal: object = None     # ProfileExpr or callable r -> lam(r)
    log_norm: object = None          # ProfileExpr or callable r -> ln||.||(r)
    h_prime_at_zero: complex = 1.0 + 0.0j

    def conformal(self, r):
        return _eval_prof(self.log_conformal, r, default=0.0)

    def norm_log(self, r):
        # default: exact cusp norm ln|ln r|
        if self.log_norm is None:
            return math.log(abs(math.log(r)))
        return _eval_prof(self.log_norm, r, default=0.0)


def _eval_prof(prof, r, default=0.0):
    if prof is None:
        return default
    if isinstance(prof, profiles.ProfileExpr):
        return profiles.eval_profile(prof, r)
    return prof(r)


@dataclass(frozen=True)
class MetricDescriptor:
    charts: tuple
    interior_volume: float = 0.0

    def chart(self, chart_id):
        for c in self.charts:
            if c.chart_id == chart_id:
                return c
        raise KeyError(chart_id)

    def density_vs_lebesgue(self, chart_id, r):
        """Metric density relative to |du|^2 on the chart."""
        c = self.chart(chart_id)
        lam = c.conformal(r)
        return math.exp(2.0 * lam) / (r * math.log(r)) ** 2


@dataclass(frozen=True)
class NormDescriptor:
    charts: tuple

    def chart(self, chart_id):
        for c in self.charts:
            if c.chart_id == chart_id:
                return c
        raise KeyError(chart_id)

    def log_norm(self, chart_id, r):
        return self.chart(chart_id).norm_log(r)


@dataclass(frozen=True)
class FlatteningFamily:
    kind: str                     # 'anomaly' | 'tight'
    theta: float
    n: int = 0
    bands: tuple = ()             # (inner_radius, outer_radius, tag)
    metric: MetricDescriptor = None
    norm: NormDescriptor = None


def anomaly_flattening(theta, chart_id="cusp0"):
    """The anomaly family: Poincare outside sqrt(theta), flat inside theta."""
    if not 0.0 < theta <= math.exp(-3.0):
        raise ValueError("theta must lie in (0, e^-3]")
    lt = math.log(theta)

    def lam(r):
        # e^(2 lam) (r|ln r|)^-2 = (r |ln r|)^(-2 psi(ln r/ln theta))
        ps = smooth_step("psi", math.log(r) / lt)
        return (1.0 - ps) * math.log(r * abs(math.log(r)))

    def lognorm(r):
        ps = smooth_step("psi", math.log(r) / lt)
        return ps * math.log(abs(math.log(r)))

    chart_m = ChartProfile(chart_id, radius=1.0, log_conformal=lam)
    chart_n = ChartProfile(chart_id, radius=1.0, log_norm=lognorm)
    md = MetricDescriptor(charts=(chart_m,))
    nd = NormDescriptor(charts=(chart_n,))
    bands = ((0.0, theta, "flat"),
             (theta, math.sqrt(theta), "band"),
             (math.sqrt(theta), 1.0, "poincare"))
    return FlatteningFamily(kind="anomaly", theta=theta, bands=bands,
                            metric=md, norm=nd)


def _tight_segment(theta, n, r):
    """Metric density relative to Lebesgue for the tight family."""
    lt = math.log(theta)
    L4 = abs(math.log(theta**4))
    u = math.log(r) / lt
    if r > theta:
        return 1.0 / (r * math.log(r)) ** 2
    if r >= theta**4:
        ph = smooth_step("phi", u)
        return u ** (2.0 * n * (1.0 - ph)) / (r * math.log(r)) ** 2
    # flat core with the sandwich-preserving interpolation variable
    flat = 1.0 / (theta**8 * L4**2)
    s = (r * abs(math.log(r)) / (theta**4 * L4)) * u ** abs(n)
    ch = smooth_step("chi", s)
    bracket = u ** (2.0 * n) * (theta**4 * L4 / (r * abs(math.log(r)))) ** 2
    return bracket**ch * flat


def tight_flattening(theta, n, chart_id="cusp0"):
    """The n-tight family (n <= 0)."""
    if n > 0:
        raise ValueError("tight flattenings are defined for n <= 0")
    if not 0.0 < theta <= 0.5:
        raise ValueError("theta must lie in (0, 1/2]")
    lt = math.log(theta)
    L4 = abs(math.log(theta**4))

    def lognorm(r):
        if r > theta:
            return math.log(abs(math.log(r)))
        u = math.log(r) / lt
        ph = smooth_step("phi", u)
        return math.log(abs(lt)) + ph * math.log(u)

    def lam(r):
        dens = _tight_segment(theta, n, r)
        return 0.5 * math.log(dens * (r * math.log(r)) ** 2)

    chart_m = ChartProfile(chart_id, radius=1.0, log_conformal=lam)
    chart_n = ChartProfile(chart_id, radius=1.0, log_norm=lognorm)
    md = MetricDescriptor(charts=(chart_m,))
    nd = NormDescriptor(charts=(chart_n,))

    # inner flat-core boundary: s = 1/2 with s = u^|n| r|ln r|/(th^4 L4)
    def s_of(r):
        return (r * abs(math.log(r)) / (theta**4 * L4)) * (math.log(r) / lt) ** abs(n)

    lo, hi = theta**8, theta**4
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if s_of(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    r_flat = lo
    bands = ((0.0, r_flat, "flat"),
             (r_flat, theta**4, "core-band"),
             (theta**4, theta**2, "tensor-trivial"),
             (theta**2, theta, "norm-band"),
             (theta, 1.0, "poincare"))
    return FlatteningFamily(kind="tight", theta=theta, n=n, bands=bands,
                            metric=md, norm=nd)


def tight_tensor_ratio(family, r):
    """(g_f (x) ||.||_f^(2n)) / (g (x) ||.||^(2n)) at radius r; <= 1."""
    theta, n = family.theta, family.n
    dens_f = _tight_segment(theta, n, r)
    dens = 1.0 / (r * math.log(r)) ** 2
    lognorm_f = family.norm.log_norm(family.norm.charts[0].chart_id, r)
    lognorm = math.log(abs(math.log(r)))
    return (dens_f / dens) * math.exp(2.0 * n * (lognorm_f - lognorm))


def wolpert_log_ratio(h_primes):
    """sum_i ln |h_i'(0)| over the chart germs."""
    total = 0.0
    for h in h_primes:
        a = abs(h)
        if a == 0.0:
            raise ValueError("germ derivative h'(0) must be nonzero")
        total += math.log(a)
    return total


def check_compatibility(fam_a, fam_b, samples=200):
    """Sampled chart-pullback compatibility of two flattening families.

    Families are compatible when they share (kind, theta, n) and the
    ratio profiles ln(g_f/g), ln(||.||_f/||.||) agree on the band.
    Returns (ok, report).
    """
    report = {"kind": (fam_a.kind, fam_b.kind),
              "theta": (fam_a.theta, fam_b.theta)}
    if fam_a.kind != fam_b.kind or fam_a.theta != fam_b.theta or fam_a.n != fam_b.n:
        report["reason"] = "mismatched family parameters"
        rs = np.geomspace(max(fam_a.theta, fam_b.theta) ** 2, 0.5, samples)
        dev = 0.0
        arg = None
        for r in rs:
            da = math.log(fam_a.metric.density_vs_lebesgue("cusp0", r))
            db = math.log(fam_b.metric.density_vs_lebesgue("cusp0", r))
            if abs(da - db) > dev:
                dev, arg = abs(da - db), r
        report["max_deviation"] = dev
        report["at_radius"] = arg
        return False, report
    rs = np.geomspace(fam_a.theta ** 4 / 8.0, 0.9, samples)
    dev = 0.0
    arg = None
    cid_a = fam_a.metric.charts[0].chart_id
    cid_b = fam_b.metric.charts[0].chart_id
    for r in rs:
        da = math.log(fam_a.metric.density_vs_lebesgue(cid_a, r))
        db = math.log(fam_b.metric.density_vs_lebesgue(cid_b, r))
        na = fam_a.norm.log_norm(cid_a, r)
        nb = fam_b.norm.log_norm(cid_b, r)
        d = max(abs(da - db), abs(na - nb))
        if d > dev:
            dev, arg = d, r
    report["max_deviation"] = dev
    report["at_radius"] = arg
    return dev < 1e-10, report


# --- JSON interface ------------------------------------------------------

def descriptor_to_json(metric, norm):
    charts = []
    for cm in metric.charts:
        cn = norm.chart(cm.chart_id)
        lam = cm.log_conformal
        ln_ = cn.log_norm
        charts.append({
            "id": cm.chart_id,
            "radius": cm.radius,
            "log_conformal": lam.source if isinstance(lam, profiles.ProfileExpr) else None,
            "log_norm": ln_.source if isinstance(ln_, profiles.ProfileExpr) else None,
            "h_prime_at_zero": [cm.h_prime_at_zero.real, cm.h_prime_at_zero.imag],
        })
    return {"charts": charts, "interior_volume": metric.interior_volume}


def descriptor_from_json(obj):
    charts_m = []
    charts_n = []
    for c in obj["charts"]:
        lam = profiles.parse(c["log_conformal"]) if c.get("log_conformal") else None
        ln_ = profiles.parse(c["log_norm"]) if c.get("log_norm") else None
        hp = c.get("h_prime_at_zero", [1.0, 0.0])
        charts_m.append(ChartProfile(c["id"], c["radius"], log_conformal=lam,
                                     h_prime_at_zero=complex(hp[0], hp[1])))
        charts_n.append(ChartProfile(c["id"], c["radius"], log_norm=ln_,
                                     h_prime_at_zero=complex(hp[0], hp[1])))
    metric = MetricDescriptor(charts=tuple(charts_m),
                              interior_volume=obj.get("interior_volume", 0.0))
    norm = NormDescriptor(charts=tuple(charts_n))
    return metric, norm


def flattening_request_from_json(obj):
    kind = obj["kind"]
    if kind == "anomaly":
        return anomaly_flattening(obj["theta"])
    if kind == "tight":
        return tight_flattening(obj["theta"], obj.get("n", 0))
    raise ValueError(f"unknown flattening kind {kind!r}")

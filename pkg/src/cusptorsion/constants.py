"""High-precision scalar constants for the torsion normalizations.

Every constant has a primary route (mpmath at elevated working precision)
and an independent series oracle.  The reported ``abs_err`` is the
disagreement between the two routes plus the oracle's truncation budget,
so a constant that fails to reproduce shows up as a fat error bar rather
than a silent bias.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp


@dataclass(frozen=True)
class HighPrecReal:
    value: float
    abs_err: float

    def __post_init__(self):
        if self.abs_err < 0.0:
            raise ValueError("abs_err must be nonnegative")


def euler_gamma_oracle(n: int = 200000) -> float:
    """gamma from H_n - ln n with two Richardson steps in 1/n."""

    def partial(k):
        return math.fsum(1.0 / i for i in range(1, k + 1)) - math.log(k)

    s1, s2, s4 = partial(n), partial(2 * n), partial(4 * n)
    # leading error is c/n: eliminate it, then the c'/n^2 term
    r1 = 2.0 * s2 - s1
    r2 = 2.0 * s4 - s2
    return (4.0 * r2 - r1) / 3.0


@lru_cache(maxsize=None)
def euler_gamma() -> HighPrecReal:
    with mp.workdps(40):
        primary = float(mp.euler)
    oracle = euler_gamma_oracle()
    return HighPrecReal(primary, abs(primary - oracle) + 1e-14)


def _zeta_prime_2_series(n_terms: int = 200000) -> float:
    """zeta'(2) = -sum ln(k)/k^2 with an Euler-Maclaurin tail."""
    n = n_terms
    head = -math.fsum(math.log(k) / k**2 for k in range(2, n + 1))
    # f(x) = ln(x)/x^2: int_n^inf f = (ln n + 1)/n, f' = (1 - 2 ln x)/x^3
    tail = (math.log(n) + 1.0) / n - 0.5 * math.log(n) / n**2 \
        - (1.0 - 2.0 * math.log(n)) / (12.0 * n**3)
    return head - tail


def zeta_prime_minus1_oracle() -> float:
    """zeta'(-1) = 1/12 - ln A with the Glaisher constant from zeta'(2).

    Uses 12 ln A = gamma + ln(2 pi) - 6 zeta'(2)/pi^2, with gamma taken
    from its own series oracle so the route stays independent of mpmath.
    """
    gamma = euler_gamma_oracle()
    zp2 = _zeta_prime_2_series()
    log_glaisher = (gamma + math.log(2.0 * math.pi)) / 12.0 - zp2 / (2.0 * math.pi**2)
    return 1.0 / 12.0 - log_glaisher


@lru_cache(maxsize=None)
def zeta_prime_minus1() -> HighPrecReal:
    with mp.workdps(40):
        primary = float(mp.zeta(-1, derivative=1))
    oracle = zeta_prime_minus1_oracle()
    return HighPrecReal(primary, abs(primary - oracle) + 1e-13)


@lru_cache(maxsize=None)
def c_k(k: int) -> HighPrecReal:
    """Torsion normalization constant c_k.

    c_0 = 4 zeta'(-1) - 1/2 + ln(2 pi); for k >= 1,

    c_k = sum_{l=0}^{k-1} (2k - 2l - 1)(ln(2k + 2kl - l^2 - l) - ln 2)
          + (1/3 + k + k^2) ln 2 + (2k + 1) ln(2 pi) + 4 zeta'(-1)
          - 2 (k + 1/2)^2 - 4 sum_{l=1}^{k-1} ln(l!) - 2 ln(k!).
    """
    if k < 0:
        raise ValueError("k must be a nonnegative integer")
    zp = zeta_prime_minus1()
    if k == 0:
        value = 4.0 * zp.value - 0.5 + math.log(2.0 * math.pi)
        return HighPrecReal(value, 4.0 * zp.abs_err + 1e-14)
    terms = [
        (2.0 * k - 2.0 * l - 1.0) * (math.log(2 * k + 2 * k * l - l * l - l) - math.log(2.0))
        for l in range(k)
    ]
    value = math.fsum(terms)
    value += (1.0 / 3.0 + k + k * k) * math.log(2.0)
    value += (2.0 * k + 1.0) * math.log(2.0 * math.pi)
    value += 4.0 * zp.value
    value -= 2.0 * (k + 0.5) ** 2
    value -= 4.0 * math.fsum(math.lgamma(l + 1.0) for l in range(1, k))
    value -= 2.0 * math.lgamma(k + 1.0)
    return HighPrecReal(value, 4.0 * zp.abs_err + 1e-12)


def c_k_oracle(k: int) -> float:
    """Independent resummation of c_k with mpmath arithmetic."""
    if k == 0:
        with mp.workdps(40):
            return float(4 * mp.zeta(-1, derivative=1) - mp.mpf(1) / 2 + mp.log(2 * mp.pi))
    with mp.workdps(40):
        total = mp.mpf(0)
        for l in range(k):
            total += (2 * k - 2 * l - 1) * mp.log(mp.mpf(2 * k + 2 * k * l - l * l - l) / 2)
        total += (mp.mpf(1) / 3 + k + k * k) * mp.log(2)
        total += (2 * k + 1) * mp.log(2 * mp.pi)
        total += 4 * mp.zeta(-1, derivative=1)
        total -= 2 * (k + mp.mpf(1) / 2) ** 2
        for l in range(1, k):
            total -= 4 * mp.log(mp.factorial(l))
        total -= 2 * mp.log(mp.factorial(k))
        return float(total)


def dedekind_eta(tau_im: float) -> HighPrecReal:
    """eta(i * tau_im) via the q-product with a certified tail bound.

    For small tau_im the modular relation eta(i/t) = sqrt(t) eta(i t) is
    applied first so the product always converges fast.
    """
    if tau_im <= 0.0:
        raise ValueError("tau_im must be positive")
    if tau_im < 0.1:
        inner = dedekind_eta(1.0 / tau_im)
        return HighPrecReal(inner.value / math.sqrt(tau_im),
                            inner.abs_err / math.sqrt(tau_im) + 1e-15)
    q = math.exp(-2.0 * math.pi * tau_im)
    log_eta = -math.pi * tau_im / 12.0
    n = 1
    qn = q
    terms = []
    while qn / (1.0 - q) > 1e-19:
        terms.append(math.log1p(-qn))
        qn *= q
        n += 1
        if n > 10000:
            break
    log_eta += math.fsum(terms)
    # |sum_{m>n} ln(1 - q^m)| <= q^(n+1) / ((1-q)(1-q^(n+1)))
    tail = qn / ((1.0 - q) * (1.0 - qn))
    value = math.exp(log_eta)
    return HighPrecReal(value, value * (tail + 1e-14))


def log_selberg_zprime_reference() -> HighPrecReal:
    """ln Z'(1) for the thrice-punctured reference sphere.

    Assembled in closed form: 4 zeta'(-1) + ln(2 pi) + (10/9) ln 2.
    """
    zp = zeta_prime_minus1()
    value = 4.0 * zp.value + math.log(2.0 * math.pi) + (10.0 / 9.0) * math.log(2.0)
    return HighPrecReal(value, 4.0 * zp.abs_err + 1e-14)

"""Regularized incomplete Beta function and binomial tails built on it."""
from __future__ import annotations

import math

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 10_000


_LN_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def stirlerr(n: float) -> float:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)``."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = n * n
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    if n > 500:
        return (s0 - s1 / nn) / n
    if n > 80:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


def bd0(x: float, np_: float) -> float:
    """Deviance term ``x log(x / np) + np - x`` without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2 * x * v
        v *= v
        j = 1
        while True:
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / np_) + np_ - x


def binom_density(x: float, n: float, p: float) -> float:
    """Binomial density ``C(n, x) p^x (1-p)^(n-x)`` for real ``0 <= x <= n``.

    Saddle-point form with Stirling remainders; relative accuracy stays near
    machine precision for large ``n``.
    """
    if x < 0 or x > n:
        return 0.0
    return _density(x, n - x, p)


def _density(x: float, y: float, p: float) -> float:
    """``binom_density(x, x + y, p)`` with the failure count ``y`` given exactly."""
    q = 1.0 - p
    n = x + y
    if p == 0.0:
        return 1.0 if x == 0 else 0.0
    if q == 0.0:
        return 1.0 if y == 0 else 0.0
    if x == 0:
        if n == 0:
            return 1.0
        return math.exp(-bd0(n, n * q) - n * p if p < 0.1 else n * math.log1p(-p))
    if y == 0:
        return math.exp(-bd0(n, n * p) - n * q if q < 0.1 else n * math.log(p))
    lc = stirlerr(n) - stirlerr(x) - stirlerr(y) - bd0(x, n * p) - bd0(y, n * q)
    lf = math.log(2 * math.pi) + math.log(x) + math.log(y) - math.log(n)
    return math.exp(lc - 0.5 * lf)


def _front(a: float, b: float, x: float) -> float:
    """``x^a (1-x)^b / (a B(a, b))``."""
    if b >= 1.0:
        # a + b - 1 can round to either side of a; pass b - 1 directly
        return (1.0 - x) * _density(a, b - 1.0, x)
    return math.exp(a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)) / a


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete Beta function ``I_x(a, b)`` for ``a, b > 0``."""
    if a <= 0 or b <= 0:
        raise ValueError(f"betainc needs a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    if x < (a + 1.0) / (a + b + 2.0):
        return _front(a, b, x) * _beta_cf(a, b, x)
    return 1.0 - _front(b, a, 1.0 - x) * _beta_cf(b, a, 1.0 - x)


def binom_cdf(k: int, n: int, p: float) -> float:
    """``P(X <= k)`` for ``X ~ Binomial(n, p)``."""
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    return betainc(n - k, k + 1, 1.0 - p)


def binom_logpmf(k: int, n: int, p: float) -> float:
    if k < 0 or k > n:
        return -math.inf
    out = log_binom(n, k)
    if k:
        out += k * math.log(p) if p > 0 else -math.inf
    if n - k:
        out += (n - k) * math.log1p(-p) if p < 1 else -math.inf
    return out

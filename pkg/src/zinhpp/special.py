"""Beta-distribution primitives used by the Bernstein baseline.

The regularized incomplete Beta function is evaluated with the modified
Lentz algorithm on the standard continued fraction, using the symmetry
``I_x(a, b) = 1 - I_{1-x}(b, a)`` to keep the fraction in its fast-converging
region.  Everything is vectorized over ``x``.
"""
import numpy as np
from scipy.special import gammaln

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 500


def log_beta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def beta_pdf(x, a, b):
    """Beta(a, b) density at ``x`` (vectorized over ``x``).

    Endpoints use the closed forms ``f(0 | 1, b) = b`` and ``f(1 | a, 1) = a``
    instead of evaluating ``0 ** 0``.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(
        (a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi) - log_beta(a, b)
    )
    lo = x == 0.0
    if np.any(lo):
        out[lo] = np.inf if a < 1 else (float(b) if a == 1 else 0.0)
    hi = x == 1.0
    if np.any(hi):
        out[hi] = np.inf if b < 1 else (float(a) if b == 1 else 0.0)
    return out


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b); assumes x < (a + 1) / (a + b + 2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _EPS
        if done.all():
            break
    return h


def betainc(a, b, x):
    """Regularized incomplete Beta function ``I_x(a, b)``.

    Parameters
    ----------
    a, b : float
        Positive shape parameters.
    x : array_like
        Evaluation points in ``[0, 1]``.

    Returns
    -------
    ndarray
        Same shape as ``x``.
    """
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    out[x == 0.0] = 0.0
    out[x == 1.0] = 1.0
    inner = (x > 0.0) & (x < 1.0)
    if np.any(inner):
        xi = x[inner]
        log_front = a * np.log(xi) + b * np.log1p(-xi) - log_beta(a, b)
        front = np.exp(log_front)
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if np.any(direct):
            res[direct] = front[direct] * _betacf(a, b, xi[direct]) / a
        flip = ~direct
        if np.any(flip):
            res[flip] = 1.0 - front[flip] * _betacf(b, a, 1.0 - xi[flip]) / b
        out[inner] = np.clip(res, 0.0, 1.0)
    return out[0] if scalar else out


def beta_cdf(x, a, b):
    return betainc(a, b, x)

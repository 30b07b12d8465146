"""Pure NumPy likelihood kernels (reference implementation and fallback).

Must stay numerically interchangeable with ``_ckernels.pyx``.
"""
import numpy as np
from scipy.special import expit, log_expit


def mixture_terms(n_events, s0, log_cum0, eta, u, zero_inflated):
    """Per-individual log-likelihood of the zero-inflated NHPP.

    Parameters
    ----------
    n_events : int64 array (m,)
    s0 : array (m,)
        Sum of baseline log-intensities at the individual's event times.
    log_cum0 : array (m,)
        Log baseline cumulative intensity at the follow-up end.
    eta : array (m,)
        Linear predictor ``x'beta + omega``.
    u : array (m,)
        Logit of the at-risk probability (ignored unless ``zero_inflated``).
    zero_inflated : bool

    Returns
    -------
    ll : array (m,)
    g_cum : array (m,)
        d ll / d log Lambda_i; the eta-derivative is ``n_events + g_cum``.
    g_u : array (m,)
        d ll / d u.
    """
    n = n_events.astype(float)
    lam = np.exp(log_cum0 + eta)
    has = n_events > 0
    ll = np.where(has, s0 + n * eta - lam, -lam)
    g_cum = -lam
    g_u = np.zeros_like(lam)
    if zero_inflated:
        lp = log_expit(u)
        lq = log_expit(-u)
        zero = ~has
        a = lp[zero] - lam[zero]
        b = lq[zero]
        mix = np.logaddexp(a, b)
        w = np.exp(a - mix)
        ll = np.where(has, ll + lp, 0.0)
        ll[zero] = mix
        g_cum = g_cum.copy()
        g_cum[zero] *= w
        pi = expit(u)
        g_u = np.where(has, 1.0 - pi, 0.0)
        g_u[zero] = w - pi[zero]
    return ll, g_cum, g_u


def bernstein_event_terms(basis, gamma, owner, offsets):
    """Sum of log baseline intensity per individual and its log-gamma gradient.

    ``basis`` holds ``g_{d,k}(t)`` for every event (rows grouped by owner).
    """
    m = len(offsets) - 1
    lam = basis @ gamma
    s0 = np.bincount(owner, weights=np.log(lam), minlength=m)
    grad = gamma * (basis.T @ (1.0 / lam))
    return s0, grad


def icar_quadratic(omega, edges):
    """Sum of squared neighbour differences and its gradient in ``omega``."""
    diff = omega[edges[:, 0]] - omega[edges[:, 1]]
    grad = np.zeros_like(omega)
    np.add.at(grad, edges[:, 0], 2.0 * diff)
    np.add.at(grad, edges[:, 1], -2.0 * diff)
    return float(diff @ diff), grad

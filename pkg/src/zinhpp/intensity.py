"""Baseline intensity families and the proportional covariate/frailty link.

Power Law:  ``lambda0(t) = a1 * a2 * t**(a2 - 1)``, ``Lambda0(t) = a1 * t**a2``.

Bernstein:  ``lambda0(t) = sum_k gamma_k g_{d,k}(t)`` with
``g_{d,k}(t) = f_Beta(t / zeta | k, d - k + 1) / zeta`` and cumulative
``sum_k gamma_k F_Beta(t / zeta | k, d - k + 1)``.

Derivatives are taken with respect to the log-scale parameters
(``log a1``, ``log a2``, ``log gamma_k``) that the sampler works with.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .special import beta_cdf, beta_pdf


def _as_times(t):
    return np.asarray(t, dtype=float)


@dataclass(frozen=True)
class PowerLawBaseline:
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ValueError("power-law parameters must be positive")

    def intensity(self, t):
        return plp_intensity(self, t)

    def cumulative(self, t):
        return plp_cumulative(self, t)

    def intensity_grad(self, t):
        """d lambda0 / d(log a1, log a2), shape ``t.shape + (2,)``."""
        t = _as_times(t)
        lam = plp_intensity(self, t)
        d_a2 = lam * (1.0 + self.alpha2 * np.log(t))
        return np.stack([lam, d_a2], axis=-1)

    def cumulative_grad(self, t):
        t = _as_times(t)
        cum = plp_cumulative(self, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            d_a2 = np.where(t > 0, cum * self.alpha2 * np.log(np.where(t > 0, t, 1.0)), 0.0)
        return np.stack([cum, d_a2], axis=-1)


def plp_intensity(b: PowerLawBaseline, t):
    t = _as_times(t)
    if np.any(t <= 0):
        raise ValueError("power-law intensity needs t > 0")
    return b.alpha1 * b.alpha2 * t ** (b.alpha2 - 1.0)


def plp_cumulative(b: PowerLawBaseline, t):
    t = _as_times(t)
    if np.any(t < 0):
        raise ValueError("cumulative intensity needs t >= 0")
    return b.alpha1 * t**b.alpha2


def plp_window_for(alpha1, alpha2, target):
    """Follow-up length ``T`` with ``alpha1 * T**alpha2 == target``."""
    if target <= 0:
        raise ValueError("target must be positive")
    return (target / alpha1) ** (1.0 / alpha2)


def _check_support(t, zeta):
    t = _as_times(t)
    if zeta <= 0:
        raise ValueError("support bound zeta must be positive")
    if np.any(t < 0) or np.any(t > zeta * (1 + 1e-12)):
        raise ValueError(f"time outside the Bernstein support [0, {zeta}]")
    return np.clip(t / zeta, 0.0, 1.0)


def bernstein_basis(d: int, zeta: float, t) -> np.ndarray:
    """Basis values ``g_{d,1..d}(t)``; shape ``t.shape + (d,)``."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    u = _check_support(t, zeta)
    flat = np.atleast_1d(u).reshape(-1)
    out = np.empty((flat.size, d))
    for k in range(1, d + 1):
        out[:, k - 1] = beta_pdf(flat, k, d - k + 1) / zeta
    return out.reshape(np.shape(u) + (d,))


def bernstein_basis_cumulative(d: int, zeta: float, t) -> np.ndarray:
    """Integrated basis ``G_{d,1..d}(t)``; shape ``t.shape + (d,)``."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    u = _check_support(t, zeta)
    flat = np.atleast_1d(u).reshape(-1)
    out = np.empty((flat.size, d))
    for k in range(1, d + 1):
        out[:, k - 1] = beta_cdf(flat, k, d - k + 1)
    return out.reshape(np.shape(u) + (d,))


@dataclass(frozen=True)
class BernsteinBaseline:
    degree: int
    gamma_log: np.ndarray
    support: float

    def __post_init__(self):
        g = np.array(self.gamma_log, dtype=float).reshape(-1)
        if g.size != self.degree or self.degree < 1:
            raise ValueError("gamma_log must have one entry per basis function")
        if not self.support > 0:
            raise ValueError("support must be positive")
        g.setflags(write=False)
        object.__setattr__(self, "gamma_log", g)

    @property
    def gamma(self):
        return np.exp(self.gamma_log)

    def intensity(self, t):
        return bernstein_basis(self.degree, self.support, t) @ self.gamma

    def cumulative(self, t):
        return bernstein_basis_cumulative(self.degree, self.support, t) @ self.gamma

    def intensity_grad(self, t):
        """d lambda0 / d log gamma_k, shape ``t.shape + (d,)``."""
        return bernstein_basis(self.degree, self.support, t) * self.gamma

    def cumulative_grad(self, t):
        return bernstein_basis_cumulative(self.degree, self.support, t) * self.gamma


def bernstein_intensity(b: BernsteinBaseline, t):
    return b.intensity(t)


def bernstein_cumulative(b: BernsteinBaseline, t):
    return b.cumulative(t)


class LinkedIntensity:
    """``t -> lambda0(t) * exp(x'beta + omega)`` with the matching cumulative."""

    def __init__(self, baseline, x=(), beta=(), omega=0.0):
        x = np.asarray(x, dtype=float).reshape(-1)
        beta = np.asarray(beta, dtype=float).reshape(-1)
        if x.shape != beta.shape:
            raise ValueError(f"covariate length {x.size} != coefficient length {beta.size}")
        self.baseline = baseline
        self.eta = float(x @ beta + omega)
        self.factor = float(np.exp(self.eta))

    def __call__(self, t):
        return self.baseline.intensity(t) * self.factor

    def cumulative(self, t):
        return self.baseline.cumulative(t) * self.factor


def linked_intensity(baseline, x=(), beta=(), omega=0.0) -> LinkedIntensity:
    return LinkedIntensity(baseline, x, beta, omega)


def sinusoid_intensity(b, t):
    """Non-monotone test intensity ``1 + b (1 + sin(pi t / 4))``."""
    t = _as_times(t)
    return 1.0 + b * (1.0 + np.sin(0.25 * np.pi * t))


def sinusoid_cumulative(b, t):
    t = _as_times(t)
    return t + b * (t + (4.0 / np.pi) * (1.0 - np.cos(0.25 * np.pi * t)))

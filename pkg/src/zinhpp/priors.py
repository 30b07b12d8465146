"""Log-prior densities, the ICAR spatial prior, and the posterior kernel."""
from __future__ import annotations

import numpy as np
from scipy.special import betaln, expit, gammaln, log_expit

from . import kernels
from .data import SpatialGraph
from .likelihood import Likelihood
from .model import ParameterLayout, PriorConfig

_LOG_2PI = np.log(2.0 * np.pi)


def gamma_logpdf(x, shape, rate):
    return shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def normal_logpdf(x, mean, sd):
    z = (np.asarray(x, dtype=float) - mean) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * _LOG_2PI


def beta_logpdf(x, a, b):
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)


class IcarPrior:
    """Intrinsic CAR log-density in pairwise-difference form.

    ``log p(omega | tau) = (L_eff / 2) log tau - (tau / 2) sum_{l~r} (omega_l - omega_r)^2
    + sum_c log N(mean_c(omega) | 0, scale / sqrt(L_c))``

    where ``L_eff = L - C`` for ``C`` connected components and the last term is a
    soft sum-to-zero constraint applied per component.
    """

    def __init__(self, graph: SpatialGraph, scale: float = 0.001):
        if graph.n_areas > 1 and len(graph.edges) == 0:
            raise ValueError("ICAR prior needs at least one edge when there are several areas")
        self.graph = graph
        self.edges = np.ascontiguousarray(graph.edges, dtype=np.int64)
        self.components = np.asarray(graph.components())
        self.n_comp = graph.n_components
        self.comp_size = np.bincount(self.components, minlength=self.n_comp).astype(float)
        self.rank = graph.n_areas - self.n_comp
        self.comp_sd = scale / np.sqrt(self.comp_size)

    def log_density(self, omega, tau):
        """Return ``(value, d/d omega, d/d tau)``."""
        omega = np.ascontiguousarray(omega, dtype=float)
        if tau <= 0:
            raise ValueError("tau must be positive")
        quad, g_quad = kernels.icar_quadratic(omega, self.edges)
        means = np.bincount(self.components, weights=omega, minlength=self.n_comp) / self.comp_size
        pen = float(np.sum(normal_logpdf(means, 0.0, self.comp_sd)))
        value = 0.5 * self.rank * np.log(tau) - 0.5 * tau * quad + pen
        g_means = -means / self.comp_sd**2
        d_omega = -0.5 * tau * g_quad + (g_means / self.comp_size)[self.components]
        d_tau = 0.5 * self.rank / tau - 0.5 * quad
        return float(value), d_omega, float(d_tau)


def icar_log_density(omega, tau, graph: SpatialGraph, scale: float = 0.001):
    return IcarPrior(graph, scale).log_density(omega, tau)


def block_log_priors(u, layout: ParameterLayout, priors: PriorConfig):
    """Sum of block log-priors in unconstrained coordinates, Jacobians included.

    The ``omega`` block is excluded; its prior is the ICAR density.
    Returns ``(value, gradient)``.
    """
    u = np.asarray(u, dtype=float)
    pr = priors
    grad = np.zeros(layout.dim)
    total = 0.0
    for b in layout.blocks.values():
        seg = u[b.slice]
        sl = b.slice
        if b.name in ("alpha1", "alpha2", "tau"):
            shape, rate = {
                "alpha1": (pr.alpha1_shape, pr.alpha1_rate),
                "alpha2": (pr.alpha2_shape, pr.alpha2_rate),
                "tau": (pr.tau_shape, pr.tau_rate),
            }[b.name]
            x = np.exp(seg)
            total += float(np.sum(gamma_logpdf(x, shape, rate) + seg))
            grad[sl] = shape - rate * x
        elif b.name in ("gamma", "beta", "psi"):
            mean, sd = {
                "gamma": (pr.log_gamma_mean, pr.log_gamma_sd),
                "beta": (pr.beta_mean, pr.beta_sd),
                "psi": (pr.psi_mean, pr.psi_sd),
            }[b.name]
            total += float(np.sum(normal_logpdf(seg, mean, sd)))
            grad[sl] = -(seg - mean) / sd**2
        elif b.name == "pi":
            a, bb = pr.pi_alpha, pr.pi_beta
            # Beta density on pi plus log pi(1-pi) from the logit transform
            total += float(np.sum(a * log_expit(seg) + bb * log_expit(-seg) - betaln(a, bb)))
            grad[sl] = a - (a + bb) * expit(seg)
    return total, grad


class Posterior:
    """Unnormalized log-posterior over the unconstrained coordinates.

    Calling the object returns ``(log density, gradient)``; this is the
    sampler target.
    """

    def __init__(self, data, spec, graph=None, zeta=None):
        self.likelihood = Likelihood(data, spec, graph, zeta)
        self.layout = self.likelihood.layout
        self.spec = spec
        self.priors = spec.priors
        self.icar = IcarPrior(graph, spec.priors.sum_to_zero_scale) if spec.variant.spatial else None
        self._log_coords = np.concatenate(
            [np.arange(b.start, b.start + b.size) for b in self.layout.blocks.values()
             if b.transform == "log"] + [np.zeros(0, dtype=int)]
        ).astype(int)

    @property
    def dim(self):
        return self.layout.dim

    def components(self, u):
        """Return (loglik result, (prior value, grad), (icar value, grad))."""
        u = np.asarray(u, dtype=float)
        ll = self.likelihood.evaluate(u)
        prior = block_log_priors(u, self.layout, self.priors)
        icar = (0.0, np.zeros(self.dim))
        if self.icar is not None:
            om = self.layout["omega"].slice
            lt = self.layout["tau"].start
            tau = float(np.exp(u[lt]))
            val, d_om, d_tau = self.icar.log_density(u[om], tau)
            g = np.zeros(self.dim)
            g[om] = d_om
            g[lt] = d_tau * tau
            icar = (val, g)
        return ll, prior, icar

    def __call__(self, u):
        """Log density and gradient; ``-inf`` where the transforms overflow."""
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u[self._log_coords]), initial=0.0) > 700:
            return -np.inf, np.zeros(self.dim)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ll, prior, icar = self.components(u)
            value = ll.total + prior[0] + icar[0]
            grad = ll.gradient + prior[1] + icar[1]
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            return -np.inf, np.zeros(self.dim)
        return float(value), grad

    def pointwise_loglik(self, u):
        return self.likelihood.pointwise(u)

    def initial_point(self, rng, radius=2.0):
        """Uniform(-radius, radius) coordinates with the frailties at zero."""
        u = rng.uniform(-radius, radius, size=self.dim)
        if "omega" in self.layout:
            u[self.layout["omega"].slice] = 0.0
        return u


def log_posterior_kernel(data, graph, u, spec):
    return Posterior(data, spec, graph)(u)

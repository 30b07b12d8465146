"""Zero-inflated NHPP log-likelihood with analytic gradients.

For an individual with follow-up ``y``, events ``t_1 < ... < t_n``, intensity
``lambda(t) = lambda0(t) exp(eta)`` and at-risk probability ``pi``::

    n > 0:  sum_j log lambda(t_j) - Lambda(y) + log pi
    n = 0:  log(pi exp(-Lambda(y)) + 1 - pi)

The no-event mixture is evaluated as a log-sum-exp. The NHPP variant fixes
``pi = 1``. No ``n!`` term is included: the density is that of the ordered
event times, identically for every variant so that criteria are comparable.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import kernels
from .data import Individual, RecurrentDataset, SpatialGraph
from .intensity import (
    BernsteinBaseline,
    PowerLawBaseline,
    bernstein_basis,
    bernstein_basis_cumulative,
)
from .model import ModelSpec, ParameterLayout


class DataWarning(UserWarning):
    pass


NEAR_ZERO_FRACTION = 1e-12


@dataclass(frozen=True)
class LogLikResult:
    total: float
    pointwise: np.ndarray
    gradient: np.ndarray | None


def pi_value(ind: Individual, params: dict, spec: ModelSpec, z=None) -> float:
    """At-risk probability for one individual.

    ``z`` overrides ``ind.zero_covariates`` (used when the model selects a
    subset of the dataset's zero-inflation columns).
    """
    v = spec.variant
    if not v.zero_inflated:
        return 1.0
    if not v.logistic_pi:
        return float(params["pi"])
    z = ind.zero_covariates if z is None else np.asarray(z, dtype=float)
    psi = np.asarray(params["psi"], dtype=float)
    if len(z) != len(psi) - 1 or len(z) == 0:
        raise ValueError(f"{v.value} needs {len(psi) - 1} zero covariates, got {len(z)}")
    return float(expit(psi[0] + z @ psi[1:]))


def _baseline(params, spec, zeta):
    if spec.variant.semiparametric:
        return BernsteinBaseline(spec.degree, np.log(params["gamma"]), zeta)
    return PowerLawBaseline(params["alpha1"], params["alpha2"])


def individual_loglik(
    ind: Individual, params: dict, spec: ModelSpec, zeta: float | None = None, x=None, z=None
) -> float:
    """Log-likelihood contribution of one individual (scalar reference path).

    ``params`` holds constrained values keyed by block name. ``zeta`` is the
    Bernstein support bound (defaults to the individual's follow-up end).
    """
    zeta = ind.follow_up_end if zeta is None else zeta
    if spec.variant.semiparametric and np.any(ind.event_times > zeta):
        raise ValueError("event time outside the Bernstein support")
    base = _baseline(params, spec, zeta)
    x = ind.intensity_covariates if x is None else np.asarray(x, dtype=float)
    beta = np.asarray(params.get("beta", np.zeros(0)), dtype=float)
    omega = 0.0
    if spec.variant.spatial:
        omega = float(np.asarray(params["omega"])[ind.stratum])
    eta = float(x @ beta) + omega
    cum = float(base.cumulative(ind.follow_up_end)) * np.exp(eta)
    pi = pi_value(ind, params, spec, z)
    if ind.n_events > 0:
        loglam = np.log(base.intensity(ind.event_times)) + eta
        out = loglam.sum() - cum
        return float(out + np.log(pi)) if spec.variant.zero_inflated else float(out)
    if not spec.variant.zero_inflated:
        return -cum
    return float(np.logaddexp(np.log(pi) - cum, np.log1p(-pi)))


class Likelihood:
    """Pointwise log-likelihood and gradient bound to one dataset and model.

    Data-only quantities are precomputed: per-individual sums of log event
    times (power law) or basis tables at event and follow-up times (Bernstein).
    """

    def __init__(self, data: RecurrentDataset, spec: ModelSpec, graph: SpatialGraph | None = None,
                 zeta: float | None = None):
        self.data = data
        self.spec = spec
        v = spec.variant
        self.x_names, self.z_names = spec.resolve_covariates(data.x_names, data.z_names)
        if v.spatial:
            if graph is None:
                raise ValueError(f"{v.value} needs a spatial graph")
            if graph.n_areas != data.n_strata:
                raise ValueError(
                    f"graph has {graph.n_areas} areas but dataset declares {data.n_strata} strata"
                )
            if graph.n_areas > 1 and len(graph.edges) == 0:
                raise ValueError("spatial variants need at least one adjacency edge")
        self.graph = graph
        n_areas = graph.n_areas if v.spatial else 0
        self.layout = ParameterLayout(spec, len(self.x_names), len(self.z_names), n_areas)
        self.m = data.m
        self.zeta = float(data.time_horizon if zeta is None else zeta)

        self.n_events = data.n_events
        self.n_total = float(self.n_events.sum())
        self.y = np.array([ind.follow_up_end for ind in data.individuals])
        self.x = np.ascontiguousarray(data.x_matrix(self.x_names))
        self.z = np.ascontiguousarray(data.z_matrix(self.z_names))
        self.strata = data.strata()
        times = np.concatenate(
            [ind.event_times for ind in data.individuals] + [np.zeros(0)]
        )
        self.offsets = np.concatenate([[0], np.cumsum(self.n_events)]).astype(np.int64)
        self.owner = np.repeat(np.arange(self.m, dtype=np.int64), self.n_events)

        if v.semiparametric:
            if np.any(self.y > self.zeta * (1 + 1e-12)):
                raise ValueError("follow-up end beyond the Bernstein support")
            d = spec.degree
            self.basis_events = np.ascontiguousarray(
                bernstein_basis(d, self.zeta, times).reshape(-1, d)
            )
            self.basis_cum = np.ascontiguousarray(bernstein_basis_cumulative(d, self.zeta, self.y))
        else:
            floor = NEAR_ZERO_FRACTION * self.zeta
            if np.any(times < floor):
                warnings.warn(
                    f"{int(np.sum(times < floor))} event times below {floor:g}; "
                    "clamped for the power-law log-intensity",
                    DataWarning,
                    stacklevel=2,
                )
                times = np.maximum(times, floor)
            logt = np.log(times)
            self.sum_log_t = np.bincount(self.owner, weights=logt, minlength=self.m)
            self.log_y = np.log(self.y)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def evaluate(self, u, gradient: bool = True) -> LogLikResult:
        u = np.asarray(u, dtype=float)
        lay = self.layout
        v = self.spec.variant
        n = self.n_events
        if v.semiparametric:
            c = u[lay["gamma"].slice]
            gam = np.exp(c)
            s0, g_c_events = kernels.bernstein_event_terms(
                self.basis_events, gam, self.owner, self.offsets
            )
            cum0 = self.basis_cum @ gam
            log_cum0 = np.log(cum0)
        else:
            a1, a2 = u[0], u[1]
            alpha2 = np.exp(a2)
            s0 = n * (a1 + a2) + (alpha2 - 1.0) * self.sum_log_t
            log_cum0 = a1 + alpha2 * self.log_y

        beta = u[lay["beta"].slice]
        eta = self.x @ beta if beta.size else np.zeros(self.m)
        if v.spatial:
            omega = u[lay["omega"].slice]
            eta = eta + omega[self.strata]
        if v.zero_inflated:
            if v.logistic_pi:
                psi = u[lay["psi"].slice]
                logit = psi[0] + self.z @ psi[1:]
            else:
                logit = np.full(self.m, u[lay["pi"].start])
        else:
            logit = np.zeros(self.m)

        ll, g_cum, g_u = kernels.mixture_terms(
            n, np.ascontiguousarray(s0), np.ascontiguousarray(log_cum0),
            np.ascontiguousarray(eta), np.ascontiguousarray(logit), v.zero_inflated,
        )
        total = float(ll.sum())
        if not gradient:
            return LogLikResult(total, ll, None)

        grad = np.zeros(lay.dim)
        g_eta = n + g_cum
        if v.semiparametric:
            grad[lay["gamma"].slice] = g_c_events + gam * ((g_cum / cum0) @ self.basis_cum)
        else:
            grad[0] = self.n_total + g_cum.sum()
            grad[1] = self.n_total + alpha2 * (self.sum_log_t.sum() + g_cum @ self.log_y)
        if beta.size:
            grad[lay["beta"].slice] = self.x.T @ g_eta
        if v.zero_inflated:
            if v.logistic_pi:
                sl = lay["psi"].slice
                grad[sl.start] = g_u.sum()
                grad[sl.start + 1:sl.stop] = self.z.T @ g_u
            else:
                grad[lay["pi"].start] = g_u.sum()
        if v.spatial:
            grad[lay["omega"].slice] = np.bincount(
                self.strata, weights=g_eta, minlength=lay["omega"].size
            )
        return LogLikResult(total, ll, grad)

    def pointwise(self, u) -> np.ndarray:
        return self.evaluate(u, gradient=False).pointwise

    def __call__(self, u):
        res = self.evaluate(u)
        return res.total, res.gradient


def total_loglik_and_gradient(data, graph, u, spec) -> LogLikResult:
    return Likelihood(data, spec, graph).evaluate(u)


# ---------------------------------------------------------------------------
# pointwise matrix artifact
# ---------------------------------------------------------------------------


def write_pointwise_csv(path, matrix, ids, chain=None, iteration=None):
    """Write a draws x individuals log-likelihood matrix with chain/iter columns."""
    matrix = np.asarray(matrix, dtype=float)
    s = matrix.shape[0]
    chain = np.zeros(s, dtype=int) if chain is None else np.asarray(chain)
    iteration = np.arange(s) if iteration is None else np.asarray(iteration)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "iter", *ids])
        for r in range(s):
            w.writerow([int(chain[r]), int(iteration[r]), *(repr(float(x)) for x in matrix[r])])


def read_pointwise_csv(path):
    """Return ``(matrix, ids, chain, iter)`` from :func:`write_pointwise_csv` output."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return arr[:, 2:], header[2:], arr[:, 0].astype(int), arr[:, 1].astype(int)

"""Synthetic recurrent-event datasets with zero inflation and ICAR frailties.

Individuals are followed on ``(0, T]`` and censored at ``T``. Each one gets
covariates ``x1 ~ Bernoulli(0.7)``, ``x2 ~ N(0, 1)``, ``z1 ~ N(0, 1)``, a
uniformly drawn area, an at-risk indicator ``V ~ Bernoulli(pi_i)`` and, when
at risk, NHPP event times with intensity ``lambda0(t) exp(x'beta + omega)``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .data import (
    Individual,
    RecurrentDataset,
    SpatialGraph,
    validate_dataset,
    write_adjacency,
    write_dataset,
)
from .intensity import plp_window_for, sinusoid_cumulative, sinusoid_intensity

X_NAMES = ("x1", "x2")
Z_NAMES = ("z1",)
GRID_POINTS = 1024
BOUND_FACTOR = 1.2


def degree_rule(n: int) -> int:
    """Bernstein degree ``round(n ** 0.4)``: 10, 12, 16 for n = 300, 500, 1000."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(1, int(round(n**0.4)))


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario.

    ``baseline`` is ``"plp"`` (uses ``alpha1``, ``alpha2``) or
    ``"sinusoid"`` (uses ``b``). Exactly one of ``pi`` and ``psi`` sets the
    at-risk probability: constant ``pi`` or logistic ``psi = (psi0, psi1)``
    on ``z1``. ``window`` is the follow-up length ``T``; when omitted for the
    power law it is solved from ``expected_events`` as the baseline
    cumulative target ``alpha1 T**alpha2``.
    """

    n: int = 300
    baseline: str = "plp"
    alpha1: float = 2.0
    alpha2: float = 1.3
    b: float = 1.0
    window: float | None = None
    expected_events: float | None = 25.0
    beta: tuple = (0.6, 0.8)
    pi: float | None = 0.75
    psi: tuple | None = None
    tau: float = 1.0
    nrow: int = 12
    ncol: int = 11
    area_weights: tuple | None = None
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        if self.psi is not None:
            object.__setattr__(self, "psi", tuple(float(v) for v in self.psi))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.baseline not in ("plp", "sinusoid"):
            raise ValueError("baseline must be 'plp' or 'sinusoid'")
        if len(self.beta) != len(X_NAMES):
            raise ValueError(f"beta needs {len(X_NAMES)} entries")
        if (self.pi is None) == (self.psi is None):
            raise ValueError("give exactly one of pi and psi")
        if self.pi is not None and not 0.0 <= self.pi <= 1.0:
            raise ValueError("pi must lie in [0, 1]")
        if self.psi is not None and len(self.psi) != 1 + len(Z_NAMES):
            raise ValueError("psi needs an intercept and one slope")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.baseline == "plp" and min(self.alpha1, self.alpha2) <= 0:
            raise ValueError("power-law parameters must be positive")
        if self.baseline == "sinusoid" and self.b <= -0.5:
            raise ValueError("sinusoid intensity needs b > -0.5")
        if self.window is None and (self.baseline != "plp" or self.expected_events is None):
            raise ValueError("window is required unless a power-law expected_events is given")
        if self.follow_up <= 0:
            raise ValueError("window must be positive")
        if self.area_weights is not None:
            w = np.asarray(self.area_weights, dtype=float)
            if w.shape != (self.nrow * self.ncol,) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("area_weights must be nonnegative, one per area")

    @property
    def follow_up(self) -> float:
        if self.window is not None:
            return float(self.window)
        return plp_window_for(self.alpha1, self.alpha2, self.expected_events)

    def graph(self) -> SpatialGraph:
        return SpatialGraph.lattice(self.nrow, self.ncol)

    def baseline_cumulative(self, t):
        if self.baseline == "plp":
            return self.alpha1 * np.asarray(t, dtype=float) ** self.alpha2
        return sinusoid_cumulative(self.b, t)

    def truth(self) -> dict:
        out = asdict(self)
        out["follow_up"] = self.follow_up
        out["baseline_cumulative_at_T"] = float(self.baseline_cumulative(self.follow_up))
        out["expected_events_interpretation"] = "baseline cumulative intensity at T"
        return out


def sample_icar_field(graph: SpatialGraph, tau: float, rng, tol: float = 1e-9) -> np.ndarray:
    """Draw from the ICAR density with precision ``tau (D - A)``.

    The draw lies in the span of the Laplacian's non-null eigenvectors, so it
    sums to zero on every connected component.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    evals, evecs = np.linalg.eigh(graph.laplacian())
    keep = evals > tol * max(1.0, evals.max(initial=0.0))
    z = rng.standard_normal(int(keep.sum()))
    return evecs[:, keep] @ (z / np.sqrt(tau * evals[keep]))


def icar_covariance(graph: SpatialGraph, tau: float) -> np.ndarray:
    """Covariance of :func:`sample_icar_field` draws: pseudo-inverse of ``tau (D - A)``."""
    return np.linalg.pinv(tau * graph.laplacian(), hermitian=True)


def simulate_plp_times(alpha1, alpha2, scale, window, rng) -> np.ndarray:
    """Event times of an NHPP with ``Lambda(t) = scale * alpha1 * t**alpha2`` by inversion."""
    rate = scale * alpha1
    total = rate * window**alpha2
    out = []
    s = rng.exponential()
    while s <= total:
        out.append((s / rate) ** (1.0 / alpha2))
        s += rng.exponential()
    return np.array(out)


def thinning_bound(intensity, window, points=GRID_POINTS, factor=BOUND_FACTOR) -> float:
    grid = np.linspace(0.0, window, points)
    vals = np.asarray(intensity(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("intensity is not finite on the window")
    return factor * float(vals.max())


def simulate_event_times(intensity, window, rng, bound=None) -> np.ndarray:
    """Lewis-Shedler thinning on ``(0, window]``.

    ``intensity`` maps an array of times to rates. ``bound`` defaults to
    1.2 times the maximum over a 1024-point grid.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    lam_max = thinning_bound(intensity, window) if bound is None else float(bound)
    if not (np.isfinite(lam_max) and lam_max >= 0):
        raise ValueError("thinning bound must be finite and nonnegative")
    if lam_max == 0:
        return np.zeros(0)
    out = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / lam_max)
        if t > window:
            break
        lam = float(np.asarray(intensity(np.array([t])))[0])
        if not np.isfinite(lam):
            raise ValueError(f"intensity is not finite at t={t}")
        if lam > lam_max * (1 + 1e-12):
            raise ValueError(f"intensity {lam} exceeds the thinning bound {lam_max}")
        if rng.uniform() * lam_max <= lam:
            out.append(t)
    return np.array(out)


def generate_dataset(cfg: ScenarioConfig, rng, graph: SpatialGraph | None = None):
    """Return ``(dataset, graph, truth)`` for one replica."""
    graph = cfg.graph() if graph is None else graph
    n_areas = graph.n_areas
    window = cfg.follow_up
    omega = sample_icar_field(graph, cfg.tau, rng)

    x1 = rng.binomial(1, 0.7, size=cfg.n).astype(float)
    x2 = rng.standard_normal(cfg.n)
    z1 = rng.standard_normal(cfg.n)
    if cfg.area_weights is None:
        strata = rng.integers(0, n_areas, size=cfg.n)
    else:
        w = np.asarray(cfg.area_weights, dtype=float)
        strata = rng.choice(n_areas, size=cfg.n, p=w / w.sum())
    if cfg.pi is not None:
        pi = np.full(cfg.n, cfg.pi)
    else:
        pi = expit(cfg.psi[0] + cfg.psi[1] * z1)
    at_risk = rng.uniform(size=cfg.n) < pi
    eta = cfg.beta[0] * x1 + cfg.beta[1] * x2 + omega[strata]

    width = len(str(cfg.n))
    individuals = []
    for i in range(cfg.n):
        times = np.zeros(0)
        if at_risk[i]:
            scale = math.exp(eta[i])
            if cfg.baseline == "plp":
                times = simulate_plp_times(cfg.alpha1, cfg.alpha2, scale, window, rng)
            else:
                times = simulate_event_times(
                    lambda t, s=scale: s * sinusoid_intensity(cfg.b, t), window, rng
                )
        individuals.append(
            Individual(f"i{i + 1:0{width}d}", window, times, (x1[i], x2[i]), (z1[i],), int(strata[i]))
        )
    data = validate_dataset(RecurrentDataset(individuals, X_NAMES, Z_NAMES, n_areas))
    truth = cfg.truth()
    truth["omega"] = omega.tolist()
    truth["at_risk"] = at_risk.astype(int).tolist()
    return data, graph, truth


def replica_rng(seed: int, replica: int):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replica)]))


def _one_replica(args):
    cfg, r = args
    data, graph, truth = generate_dataset(cfg, replica_rng(cfg.seed, r))
    truth["replica"] = r
    return data, graph, truth


def generate_replicas(cfg: ScenarioConfig, jobs: int = 1):
    """All replicas of a scenario, in replica order, each from its own substream."""
    args = [(cfg, r) for r in range(cfg.replications)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_one_replica, args))
    return [_one_replica(a) for a in args]


def write_replica(out_dir, data, graph, truth):
    """Write ``events.csv``, ``covariates.csv``, ``adjacency.csv`` and ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(data, out / "events.csv", out / "covariates.csv", graph.labels)
    write_adjacency(graph, out / "adjacency.csv")
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Static-trajectory Hamiltonian Monte Carlo with warmup adaptation.

Each transition draws a leapfrog count uniformly from ``1..n_max`` where
``n_max = min(max_leapfrog, ceil(path_length / step_size))``. Warmup follows
the usual windowed scheme: a fast step-size-only phase, a sequence of
doubling slow windows that re-estimate the metric from draws, and a final
fast phase. Step size is tuned with dual averaging toward
``target_accept``.

With ``init_optimize`` each chain first climbs from its random start to a
local mode with L-BFGS and seeds the metric with the inverse of a
finite-difference Hessian there. This keeps the first adaptation windows
from being spent on the transient.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 2
    iterations: int = 2000
    warmup: int = 1000
    target_accept: float = 0.8
    max_leapfrog: int = 256
    path_length: float = 10.0
    metric: str = "dense"
    adapt_window: int = 25
    init_optimize: bool = True
    divergence_threshold: float = 1000.0
    init_radius: float = 2.0
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if not 0 <= self.warmup < self.iterations:
            raise ValueError("warmup must be smaller than iterations")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.max_leapfrog < 1:
            raise ValueError("max_leapfrog must be >= 1")
        if self.metric not in ("diag", "dense"):
            raise ValueError("metric must be 'diag' or 'dense'")
        if self.adapt_window < 1:
            raise ValueError("adapt_window must be >= 1")
        if self.path_length <= 0:
            raise ValueError("path_length must be positive")

    @property
    def kept(self) -> int:
        return self.iterations - self.warmup


@dataclass
class PosteriorSample:
    """Kept draws from all chains, merged in chain order.

    ``draws`` are unconstrained coordinates, shape (chains, kept, dim).
    Optional fields are filled by model-aware callers.
    """

    draws: np.ndarray
    logp: np.ndarray
    accept_stat: np.ndarray
    divergent: np.ndarray
    n_leapfrog: np.ndarray
    step_size: np.ndarray
    warmup_divergences: np.ndarray
    runtime: float
    names: list = field(default_factory=list)
    constrained: np.ndarray | None = None
    pointwise_loglik: np.ndarray | None = None
    loglik: np.ndarray | None = None

    @property
    def n_chains(self):
        return self.draws.shape[0]

    @property
    def n_kept(self):
        return self.draws.shape[1]

    @property
    def divergences(self) -> int:
        return int(self.divergent.sum())


class _Metric:
    def __init__(self, dim, kind):
        self.kind = kind
        self.dim = dim
        self.set(np.ones(dim) if kind == "diag" else np.eye(dim))

    def set(self, cov):
        if self.kind == "diag":
            self.inv_mass = np.asarray(cov, dtype=float)
            self.sqrt_mass = 1.0 / np.sqrt(self.inv_mass)
        else:
            self.inv_mass = np.asarray(cov, dtype=float)
            mass = np.linalg.inv(self.inv_mass)
            mass = 0.5 * (mass + mass.T)
            self.chol_mass = np.linalg.cholesky(mass)

    def sample_momentum(self, rng):
        z = rng.standard_normal(self.dim)
        if self.kind == "diag":
            return z * self.sqrt_mass
        return self.chol_mass @ z

    def velocity(self, p):
        if self.kind == "diag":
            return self.inv_mass * p
        return self.inv_mass @ p

    def kinetic(self, p):
        return 0.5 * float(p @ self.velocity(p))


def _regularized(samples, kind):
    n = samples.shape[0]
    w = n / (n + 5.0)
    reg = 1e-3 * 5.0 / (n + 5.0)
    if kind == "diag":
        return w * samples.var(axis=0, ddof=1) + reg
    cov = np.atleast_2d(np.cov(samples, rowvar=False))
    return w * cov + reg * np.eye(samples.shape[1])


def _windows(warmup, base=25):
    """Stan-style adaptation schedule; returns (init_buffer, window ends)."""
    if warmup < 20:
        return warmup, []
    init, term = 75, 50
    if warmup < init + term + base:
        init = int(0.15 * warmup)
        term = int(0.1 * warmup)
        base = warmup - init - term
    ends = []
    start, size = init, base
    slow_end = warmup - term
    while start < slow_end:
        end = start + size
        if end + 2 * size > slow_end:
            end = slow_end
        ends.append(end)
        start = end
        size *= 2
    return init, ends


class _DualAveraging:
    def __init__(self, step, target, gamma=0.1, t0=10.0, kappa=0.75):
        self.mu = math.log(10.0 * step)
        self.target = target
        self.gamma, self.t0, self.kappa = gamma, t0, kappa
        self.count = 0
        self.h_bar = 0.0
        self.log_step_bar = 0.0

    def update(self, accept):
        self.count += 1
        m = self.count
        eta = 1.0 / (m + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept)
        log_step = self.mu - math.sqrt(m) / self.gamma * self.h_bar
        w = m ** (-self.kappa)
        self.log_step_bar = w * log_step + (1.0 - w) * self.log_step_bar
        return math.exp(log_step)

    @property
    def final(self):
        return math.exp(self.log_step_bar)


class _Chain:
    def __init__(self, target, dim, config, rng):
        self.target = target
        self.dim = dim
        self.cfg = config
        self.rng = rng
        self.metric = _Metric(dim, config.metric)

    def leapfrog(self, q, p, grad, step, n_steps):
        p = p + 0.5 * step * grad
        for i in range(n_steps):
            q = q + step * self.metric.velocity(p)
            logp, grad = self.target(q)
            if not np.isfinite(logp):
                return q, p, logp, grad
            if i + 1 < n_steps:
                p = p + step * grad
        p = p + 0.5 * step * grad
        return q, p, logp, grad

    def transition(self, q, logp, grad, step):
        p0 = self.metric.sample_momentum(self.rng)
        h0 = -logp + self.metric.kinetic(p0)
        n_max = max(1, min(self.cfg.max_leapfrog, math.ceil(self.cfg.path_length / step)))
        n_steps = int(self.rng.integers(1, n_max + 1))
        q1, p1, logp1, grad1 = self.leapfrog(q, p0, grad, step, n_steps)
        h1 = -logp1 + self.metric.kinetic(p1) if np.isfinite(logp1) else np.inf
        delta = h1 - h0
        divergent = (not np.isfinite(delta)) or delta > self.cfg.divergence_threshold
        accept = 0.0 if divergent else min(1.0, math.exp(-delta)) if delta > 0 else 1.0
        if not divergent and self.rng.uniform() < accept:
            return q1, logp1, grad1, accept, divergent, n_steps
        return q, logp, grad, accept, divergent, n_steps

    def initial_step(self, q, logp, grad):
        """Heuristic starting step size: double/halve until acceptance crosses 1/2."""
        step = 1.0
        p = self.metric.sample_momentum(self.rng)
        h0 = -logp + self.metric.kinetic(p)

        def accept_prob(eps):
            _, p1, lp1, _ = self.leapfrog(q, p, grad, eps, 1)
            if not np.isfinite(lp1):
                return 0.0
            d = h0 - (-lp1 + self.metric.kinetic(p1))
            return math.exp(min(0.0, d))

        a = accept_prob(step)
        direction = 1 if a > 0.5 else -1
        for _ in range(100):
            if direction == 1 and not a > 0.5:
                break
            if direction == -1 and not a <= 0.5:
                break
            step = step * (2.0**direction)
            if step < 1e-12 or step > 1e7:
                break
            a = accept_prob(step)
        return step


def _initialize(target, dim, config, rng, init_fn):
    for _ in range(100):
        q = init_fn(rng) if init_fn is not None else rng.uniform(
            -config.init_radius, config.init_radius, size=dim
        )
        logp, grad = target(q)
        if np.isfinite(logp) and np.all(np.isfinite(grad)):
            return np.asarray(q, dtype=float), logp, grad
    raise SamplerError("target is not finite at 100 jittered initial points")


def _hessian(target, q, h=1e-5):
    """Symmetrized central-difference Hessian of the log density."""
    dim = len(q)
    H = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        gp = target(q + e)[1]
        gm = target(q - e)[1]
        H[:, j] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def _optimize_start(target, q, logp, grad, kind):
    """Move to a nearby mode; return (q, logp, grad, inverse metric or None)."""
    from scipy.optimize import minimize

    def fun(x):
        lp, g = target(x)
        if not np.isfinite(lp):
            return 1e300, np.zeros_like(x)
        return -lp, -g

    res = minimize(fun, q, jac=True, method="L-BFGS-B", options={"maxiter": 2000})
    lp, g = target(res.x)
    if np.isfinite(lp) and lp >= logp and np.all(np.isfinite(g)):
        q, logp, grad = np.asarray(res.x, dtype=float), lp, g
    neg_h = -_hessian(target, q)
    if not np.all(np.isfinite(neg_h)):
        return q, logp, grad, None
    evals, evecs = np.linalg.eigh(neg_h)
    if evals.max() <= 0:
        return q, logp, grad, None
    # flat or non-concave directions get unit scale
    evals = np.where(evals > 1e-8 * evals.max(), evals, 1.0)
    cov = (evecs / evals) @ evecs.T
    cov = 0.5 * (cov + cov.T)
    return q, logp, grad, (np.diag(cov).copy() if kind == "diag" else cov)


def run_chain(target, dim, config: SamplerConfig, chain: int, init_fn=None):
    """Run one chain; returns a dict of arrays for the kept iterations."""
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), int(chain)]))
    ch = _Chain(target, dim, config, rng)
    q, logp, grad = _initialize(target, dim, config, rng, init_fn)
    if config.init_optimize and config.warmup > 0:
        q, logp, grad, cov = _optimize_start(target, q, logp, grad, config.metric)
        if cov is not None:
            try:
                ch.metric.set(cov)
            except np.linalg.LinAlgError:
                log.debug("chain %d: Hessian metric rejected, keeping unit metric", chain)
    step = ch.initial_step(q, logp, grad)
    da = _DualAveraging(step, config.target_accept)
    init_buffer, window_ends = _windows(config.warmup, config.adapt_window)
    window_start = init_buffer
    window_draws = []
    warm_div = 0

    kept = config.kept
    draws = np.empty((kept, dim))
    logps = np.empty(kept)
    accepts = np.empty(kept)
    divs = np.zeros(kept, dtype=bool)
    nsteps = np.empty(kept, dtype=np.int64)

    for it in range(config.iterations):
        q, logp, grad, acc, div, ns = ch.transition(q, logp, grad, step)
        if it < config.warmup:
            warm_div += int(div)
            step = da.update(acc)
            if window_ends and window_start <= it < window_ends[-1]:
                window_draws.append(q.copy())
            if window_ends and it + 1 == window_ends[0]:
                window_ends.pop(0)
                ch.metric.set(_regularized(np.array(window_draws), config.metric))
                window_draws = []
                window_start = it + 1
                step = ch.initial_step(q, logp, grad)
                da = _DualAveraging(step, config.target_accept)
            if it + 1 == config.warmup:
                step = da.final
                if warm_div == config.warmup:
                    raise SamplerError(f"chain {chain}: every warmup transition diverged")
        else:
            k = it - config.warmup
            draws[k] = q
            logps[k] = logp
            accepts[k] = acc
            divs[k] = div
            nsteps[k] = ns
    return {
        "draws": draws,
        "logp": logps,
        "accept": accepts,
        "divergent": divs,
        "n_leapfrog": nsteps,
        "step": step,
        "warmup_divergences": warm_div,
    }


def _run_chain_star(args):
    return run_chain(*args)


def run_hmc(target, dim, config: SamplerConfig, init_fn=None) -> PosteriorSample:
    """Sample ``target`` (a callable ``u -> (log density, gradient)``).

    Chains are independent; with ``config.jobs > 1`` they run in worker
    processes (the target must then be picklable). Output order is by chain
    index regardless of completion order.
    """
    t0 = time.perf_counter()
    args = [(target, dim, config, c, init_fn) for c in range(config.chains)]
    if config.jobs > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, config.chains)) as ex:
            results = list(ex.map(_run_chain_star, args))
    else:
        results = [run_chain(*a) for a in args]
    runtime = time.perf_counter() - t0
    sample = PosteriorSample(
        draws=np.stack([r["draws"] for r in results]),
        logp=np.stack([r["logp"] for r in results]),
        accept_stat=np.stack([r["accept"] for r in results]),
        divergent=np.stack([r["divergent"] for r in results]),
        n_leapfrog=np.stack([r["n_leapfrog"] for r in results]),
        step_size=np.array([r["step"] for r in results]),
        warmup_divergences=np.array([r["warmup_divergences"] for r in results]),
        runtime=runtime,
    )
    log.debug(
        "hmc: %d chains, mean accept %.3f, %d divergences, %.1fs",
        config.chains, sample.accept_stat.mean(), sample.divergences, runtime,
    )
    return sample

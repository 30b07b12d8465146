"""Model fitting on top of the sampler, plus fit artifacts on disk."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .data import RecurrentDataset, SpatialGraph
from .diagnostics import max_rhat, summarize
from .intensity import bernstein_basis
from .likelihood import read_pointwise_csv, write_pointwise_csv
from .model import ModelSpec, PriorConfig
from .priors import Posterior
from .sampler import PosteriorSample, SamplerConfig, run_hmc

RHAT_LIMIT = 1.05


@dataclass
class FitResult:
    """Posterior draws of one model on one dataset.

    ``constrained`` is (chains, kept, n_params) in ``names`` order and
    ``pointwise`` is (chains, kept, m).
    """

    spec: ModelSpec
    names: list
    constrained: np.ndarray
    pointwise: np.ndarray
    ids: list
    zeta: float
    sample: PosteriorSample | None = None
    area_labels: tuple = ()

    @property
    def loglik(self) -> np.ndarray:
        return self.pointwise.sum(axis=-1)

    def pointwise_matrix(self) -> np.ndarray:
        return self.pointwise.reshape(-1, self.pointwise.shape[-1])

    def column(self, name) -> np.ndarray:
        return self.constrained[:, :, self.names.index(name)]

    def posterior_mean(self, name) -> float:
        return float(self.column(name).mean())

    def summary(self):
        return summarize(self.constrained, self.names)

    def max_rhat(self) -> float:
        return max_rhat(self.constrained)

    def converged(self, limit=RHAT_LIMIT) -> bool:
        r = self.max_rhat()
        return bool(np.isfinite(r) and r <= limit)

    def block_draws(self, block) -> np.ndarray:
        """Pooled constrained draws of one block, (draws, size)."""
        cols = [j for j, n in enumerate(self.names) if n == block or n.startswith(block + "_")]
        return self.constrained[:, :, cols].reshape(-1, len(cols))


def fit_model(data: RecurrentDataset, spec: ModelSpec, graph: SpatialGraph | None = None,
              config: SamplerConfig | None = None, zeta: float | None = None) -> FitResult:
    """Sample the posterior of ``spec`` given ``data`` (and ``graph`` for SE variants)."""
    config = SamplerConfig() if config is None else config
    post = Posterior(data, spec, graph if spec.variant.spatial else None, zeta)
    lay = post.layout
    sample = run_hmc(post, post.dim, config, init_fn=post.initial_point)
    c, k, _ = sample.draws.shape
    flat = sample.draws.reshape(c * k, -1)
    constrained = np.array([lay.flat_constrained(u) for u in flat]).reshape(c, k, -1)
    pointwise = np.array([post.pointwise_loglik(u) for u in flat]).reshape(c, k, -1)
    labels = tuple(graph.labels) if (graph is not None and spec.variant.spatial) else ()
    names = lay.coordinate_names(post.likelihood.x_names, post.likelihood.z_names,
                                 list(labels) or None)
    sample.names = names
    sample.constrained = constrained
    sample.pointwise_loglik = pointwise
    sample.loglik = pointwise.sum(axis=-1)
    return FitResult(spec, names, constrained, pointwise,
                     [ind.id for ind in data.individuals], post.likelihood.zeta, sample, labels)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "variant": spec.variant.value,
        "degree": spec.degree,
        "intensity_covariates": list(spec.intensity_covariates) if spec.intensity_covariates is not None else None,
        "zero_covariates": list(spec.zero_covariates) if spec.zero_covariates is not None else None,
        "priors": asdict(spec.priors),
    }


def spec_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(
        d["variant"], d.get("degree"), PriorConfig(**d.get("priors", {})),
        d.get("intensity_covariates"), d.get("zero_covariates"),
    )


def _fmt(x) -> str:
    return repr(float(x))


def diagnostics_dict(fit: FitResult) -> dict:
    rows = fit.summary()
    s = fit.sample
    out = {
        "max_rhat": fit.max_rhat(),
        "rhat": {r["name"]: r["rhat"] for r in rows},
        "ess_bulk": {r["name"]: r["ess"] for r in rows},
        "kernel_backend": kernels.BACKEND,
    }
    if s is not None:
        out.update({
            "divergences": s.divergences,
            "warmup_divergences": [int(v) for v in s.warmup_divergences],
            "mean_accept": float(s.accept_stat.mean()),
            "step_size": [float(v) for v in s.step_size],
            "mean_leapfrog": float(s.n_leapfrog.mean()),
            "runtime_seconds": s.runtime,
        })
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in out.items()}


def write_fit(out_dir, fit: FitResult, extra: dict | None = None):
    """Write ``draws.csv``, ``loglik.csv``, ``summary.csv``, ``diagnostics.json``, ``fit.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c, k, _ = fit.constrained.shape
    with open(out / "draws.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "iter", *fit.names])
        for ci in range(c):
            for it in range(k):
                w.writerow([ci, it, *map(_fmt, fit.constrained[ci, it])])
    chain = np.repeat(np.arange(c), k)
    iteration = np.tile(np.arange(k), c)
    write_pointwise_csv(out / "loglik.csv", fit.pointwise_matrix(), fit.ids, chain, iteration)
    write_summary_csv(out / "summary.csv", fit.summary())
    diag = diagnostics_dict(fit)
    with open(out / "diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)
        fh.write("\n")
    meta = {"spec": _spec_to_dict(fit.spec), "zeta": fit.zeta, "area_labels": list(fit.area_labels)}
    meta.update(extra or {})
    with open(out / "fit.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def write_summary_csv(path, rows):
    keys = ["name", "mean", "sd", "q2.5", "q50", "q97.5", "rhat", "ess"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([r["name"]] + [_fmt(r[k]) for k in keys[1:]])


def load_fit(fit_dir) -> FitResult:
    """Rebuild a :class:`FitResult` (without sampler internals) from artifacts."""
    d = Path(fit_dir)
    missing = [f for f in ("draws.csv", "loglik.csv", "fit.json") if not (d / f).exists()]
    if missing:
        raise FileNotFoundError(f"{d}: missing fit artifacts {missing}")
    with open(d / "fit.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(d / "draws.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in r] for r in reader])
    chains = rows[:, 0].astype(int)
    c = int(chains.max()) + 1
    k = len(rows) // c
    constrained = rows[:, 2:].reshape(c, k, -1)
    ll, ids, _, _ = read_pointwise_csv(d / "loglik.csv")
    return FitResult(spec_from_dict(meta["spec"]), header[2:], constrained,
                     ll.reshape(c, k, -1), ids, float(meta["zeta"]), None,
                     tuple(meta.get("area_labels", ())))


def baseline_curve(fit: FitResult, n_points: int = 200, probs=(0.025, 0.975)):
    """Posterior mean and band of the baseline intensity on ``[0, zeta]``."""
    t = np.linspace(0.0, fit.zeta, n_points)
    if fit.spec.variant.semiparametric:
        gam = fit.block_draws("gamma")
        curves = gam @ bernstein_basis(fit.spec.degree, fit.zeta, t).reshape(n_points, -1).T
    else:
        a1 = fit.block_draws("alpha1")
        a2 = fit.block_draws("alpha2")
        with np.errstate(divide="ignore", invalid="ignore"):
            curves = a1 * a2 * np.power(t[None, :], a2 - 1.0)
    lo, hi = np.quantile(curves, probs, axis=0)
    return t, curves.mean(axis=0), lo, hi


def area_effects(fit: FitResult, probs=(0.025, 0.975)):
    """Posterior mean and band of ``exp(omega)`` per area."""
    om = np.exp(fit.block_draws("omega"))
    lo, hi = np.quantile(om, probs, axis=0)
    return om.mean(axis=0), lo, hi

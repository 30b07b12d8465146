"""WAIC and Pareto-smoothed importance-sampling LOO on the deviance scale.

Both criteria take a pointwise log-likelihood matrix with one row per
posterior draw and one column per individual. Lower values are better.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

K_THRESHOLD = 0.7
MIN_DRAWS_WARN = 100


class SelectionWarning(UserWarning):
    pass


@dataclass
class CriterionReport:
    """One criterion evaluated on one fit.

    ``pointwise`` holds per-individual elpd contributions, so that
    ``value == -2 * pointwise.sum()``.
    """

    criterion: str
    value: float
    se: float
    pointwise: np.ndarray
    p_eff: float
    pareto_k: np.ndarray | None = None
    flags: np.ndarray | None = None
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def elpd(self) -> float:
        return -0.5 * self.value

    @property
    def m(self) -> int:
        return len(self.pointwise)

    @property
    def n_flagged(self) -> int:
        return 0 if self.flags is None else int(np.sum(self.flags))

    def to_dict(self) -> dict:
        out = {
            "criterion": self.criterion,
            "label": self.label,
            "value": self.value,
            "se": self.se,
            "elpd": self.elpd,
            "p_eff": self.p_eff,
            "m": self.m,
        }
        if self.pareto_k is not None:
            k = self.pareto_k
            out["pareto_k_max"] = float(np.nanmax(k)) if np.any(np.isfinite(k)) else None
            out["n_k_flagged"] = self.n_flagged
        out.update(self.extra)
        return out


def _check(ll, min_draws):
    ll = np.asarray(ll, dtype=float)
    if ll.ndim == 3:
        ll = ll.reshape(-1, ll.shape[-1])
    if ll.ndim != 2:
        raise ValueError("pointwise log-likelihood must be draws x individuals")
    if ll.shape[0] < min_draws:
        raise ValueError(f"need at least {min_draws} draws, got {ll.shape[0]}")
    if not np.all(np.isfinite(ll)):
        raise ValueError("pointwise log-likelihood contains non-finite entries")
    if ll.shape[0] < MIN_DRAWS_WARN:
        warnings.warn(
            f"only {ll.shape[0]} draws; at least {MIN_DRAWS_WARN} are recommended",
            SelectionWarning,
            stacklevel=3,
        )
    return ll


def _se(pointwise):
    m = len(pointwise)
    return float(2.0 * math.sqrt(m * np.var(pointwise, ddof=1))) if m > 1 else 0.0


def waic(ll, label="") -> CriterionReport:
    """Widely applicable information criterion.

    ``lppd_i = log mean_s p(y_i | theta_s)`` and
    ``p_W = 2 sum_i (lppd_i - mean_s log p(y_i | theta_s))``, which is
    nonnegative by Jensen's inequality. ``WAIC = -2 lppd + 2 p_W``.
    """
    ll = _check(ll, 2)
    s = ll.shape[0]
    lppd = logsumexp(ll, axis=0) - math.log(s)
    p_i = 2.0 * (lppd - ll.mean(axis=0))
    # constant columns give exact zero, not rounding noise
    p_i = np.where(np.ptp(ll, axis=0) == 0, 0.0, np.maximum(p_i, 0.0))
    elpd_i = lppd - p_i
    return CriterionReport("waic", float(-2.0 * elpd_i.sum()), _se(elpd_i), elpd_i,
                           float(p_i.sum()), label=label)


# ---------------------------------------------------------------------------
# Pareto smoothing
# ---------------------------------------------------------------------------


def gpd_fit_zhang_stephens(x, prior_k=10.0, adjust=True):
    """Generalized Pareto fit to positive exceedances ``x``.

    Profile-posterior estimator of Zhang and Stephens with the weakly
    informative shrinkage of ``k`` toward 0.5. Returns ``(k, sigma)``.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n < 2 or x[int(n / 4 + 0.5) - 1] <= 0:
        return float("nan"), float("nan")
    m_est = 30 + int(math.sqrt(n))
    b = 1.0 - np.sqrt(m_est / (np.arange(1, m_est + 1) - 0.5))
    b /= 3.0 * x[int(n / 4 + 0.5) - 1]
    b += 1.0 / x[-1]
    k_b = np.log1p(-b[:, None] * x).mean(axis=1)
    len_scale = n * (np.log(-b / k_b) - k_b - 1.0)
    with np.errstate(over="ignore"):
        w = 1.0 / np.exp(len_scale - len_scale[:, None]).sum(axis=1)
    keep = w >= 10 * np.finfo(float).eps
    w, b = w[keep], b[keep]
    w /= w.sum()
    b_post = float(np.sum(b * w))
    k = float(np.log1p(-b_post * x).mean())
    sigma = -k / b_post
    if adjust:
        k = (n * k + prior_k * 0.5) / (n + prior_k)
    return k, sigma


def gpd_quantile(p, k, sigma):
    p = np.asarray(p, dtype=float)
    if abs(k) < 1e-12:
        return -sigma * np.log1p(-p)
    return sigma * np.expm1(-k * np.log1p(-p)) / k


def psis_smooth(log_weights):
    """Pareto-smooth one column of log importance ratios.

    Returns ``(smoothed log weights, k)``. The largest ``M = ceil(min(0.2 S,
    3 sqrt S))`` ratios are replaced by GPD quantiles fitted with the
    location at the (M+1)-th largest ratio, then truncated at the largest
    raw ratio. Only ratios strictly above the location enter the fit. ``k``
    is NaN when fewer than five remain.
    """
    lw = np.asarray(log_weights, dtype=float)
    s = len(lw)
    if not np.all(np.isfinite(lw)):
        raise ValueError("non-finite importance ratios")
    lw = lw - lw.max()
    m_tail = int(math.ceil(min(0.2 * s, 3.0 * math.sqrt(s))))
    if m_tail < 5 or s <= m_tail:
        return lw, float("nan")
    order = np.argsort(lw, kind="stable")
    cutoff = lw[order[-m_tail - 1]]
    # repeated draws tie with the cutoff; only strict exceedances enter the fit
    tail_idx = order[-m_tail:]
    tail_idx = tail_idx[lw[tail_idx] > cutoff]
    m_tail = len(tail_idx)
    if m_tail < 5:
        return lw, float("nan")
    exceed = np.exp(lw[tail_idx]) - math.exp(cutoff)
    k, sigma = gpd_fit_zhang_stephens(exceed)
    if not (np.isfinite(k) and np.isfinite(sigma) and sigma > 0):
        return lw, float("nan")
    p = (np.arange(1, m_tail + 1) - 0.5) / m_tail
    smoothed = np.log(math.exp(cutoff) + gpd_quantile(p, k, sigma))
    out = lw.copy()
    out[tail_idx] = smoothed
    np.minimum(out, 0.0, out=out)
    return out, float(k)


def truncated_is_weights(log_ratios):
    """Truncated importance weights ``min(r, sqrt(S) mean(r))`` on the log scale."""
    lr = np.asarray(log_ratios, dtype=float)
    s = len(lr)
    log_cap = logsumexp(lr) - math.log(s) + 0.5 * math.log(s)
    return np.minimum(lr, log_cap)


def _loo_from_weights(ll, lw):
    return logsumexp(lw + ll, axis=0) - logsumexp(lw, axis=0)


def psis_loo(ll, label="") -> CriterionReport:
    """PSIS-LOO on the deviance scale with per-individual Pareto ``k``.

    Individuals with ``k > 0.7`` or undefined ``k`` are flagged.
    """
    ll = _check(ll, 5)
    s, m = ll.shape
    lw = np.empty_like(ll)
    ks = np.empty(m)
    for i in range(m):
        lw[:, i], ks[i] = psis_smooth(-ll[:, i])
    elpd_i = _loo_from_weights(ll, lw)
    lppd = logsumexp(ll, axis=0) - math.log(s)
    flags = ~(ks <= K_THRESHOLD)
    return CriterionReport(
        "psis-loo", float(-2.0 * elpd_i.sum()), _se(elpd_i), elpd_i,
        float(np.sum(lppd - elpd_i)), pareto_k=ks, flags=flags, label=label,
    )


def tis_loo(ll, label="") -> CriterionReport:
    """LOO with truncated (unsmoothed) importance weights."""
    ll = _check(ll, 2)
    s = ll.shape[0]
    lw = np.column_stack([truncated_is_weights(-ll[:, i]) for i in range(ll.shape[1])])
    elpd_i = _loo_from_weights(ll, lw)
    lppd = logsumexp(ll, axis=0) - math.log(s)
    return CriterionReport("tis-loo", float(-2.0 * elpd_i.sum()), _se(elpd_i), elpd_i,
                           float(np.sum(lppd - elpd_i)), label=label)


def compare_models(reports, labels=None):
    """Rank reports (ascending criterion) with differences to the best.

    Returns a list of dicts with ``label, value, se, diff, diff_se`` where
    ``diff`` is this model minus the best on the deviance scale and
    ``diff_se`` comes from the pointwise elpd differences.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to compare")
    if labels is not None:
        labels = list(labels)
        if len(labels) != len(reports):
            raise ValueError("one label per report")
    else:
        labels = [r.label or f"model{j + 1}" for j, r in enumerate(reports)]
    m = reports[0].m
    if any(r.m != m for r in reports):
        raise ValueError("reports were computed on different numbers of individuals")
    if len({r.criterion for r in reports}) > 1:
        raise ValueError("reports use different criteria")
    order = sorted(range(len(reports)), key=lambda j: (reports[j].value, j))
    best = reports[order[0]]
    rows = []
    for rank, j in enumerate(order, start=1):
        r = reports[j]
        d = -2.0 * (r.pointwise - best.pointwise)
        rows.append({
            "rank": rank,
            "label": labels[j],
            "value": r.value,
            "se": r.se,
            "diff": float(d.sum()),
            "diff_se": float(math.sqrt(m * np.var(d, ddof=1))) if m > 1 else 0.0,
            "p_eff": r.p_eff,
            "n_k_flagged": r.n_flagged,
        })
    return rows


def write_comparison_json(path, rows, reports=None):
    payload = {"ranking": rows}
    if reports is not None:
        payload["reports"] = [r.to_dict() for r in reports]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")

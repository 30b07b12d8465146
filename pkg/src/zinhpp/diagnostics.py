"""Convergence diagnostics and posterior summaries.

R-hat is the rank-normalized split statistic (maximum of the bulk and
folded-tail versions); ESS is the bulk effective sample size with Geyer's
initial positive sequence truncation.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata


class DiagnosticWarning(UserWarning):
    pass


def _as_chains(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected draws shaped (chains, iterations)")
    return x


def _split(x):
    n = x.shape[1]
    half = n // 2
    if half < 4:
        raise ValueError("need at least 4 draws per split half-chain")
    return np.concatenate([x[:, :half], x[:, n - half:]], axis=0)


def _rank_normalize(x):
    r = rankdata(x, method="average").reshape(x.shape)
    return ndtri((r - 0.375) / (x.size + 0.25))


def _rhat_basic(x):
    c, n = x.shape
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


def _is_constant(x):
    return not np.all(np.isfinite(x)) or np.ptp(x) == 0


def split_rhat(draws) -> float:
    """Rank-normalized split R-hat for one parameter.

    ``draws`` is (chains, iterations) or a single chain. Constant input
    returns NaN with a :class:`DiagnosticWarning`.
    """
    x = _split(_as_chains(draws))
    if _is_constant(x):
        warnings.warn("R-hat undefined for constant draws", DiagnosticWarning, stacklevel=2)
        return float("nan")
    bulk = _rhat_basic(_rank_normalize(x))
    fold = np.abs(x - np.median(x))
    tail = _rhat_basic(_rank_normalize(fold)) if np.ptp(fold) > 0 else bulk
    return max(bulk, tail)


def _autocov(x):
    n = len(x)
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    ac = np.fft.irfft(f * np.conj(f), size)[:n] / n
    return ac


def _ess_raw(x):
    c, n = x.shape
    acov = np.array([_autocov(row) for row in x])
    chain_mean = x.mean(axis=1)
    chain_var = acov[:, 0] * n / (n - 1)
    w = chain_var.mean()
    var_plus = w * (n - 1) / n
    if c > 1:
        var_plus += chain_mean.var(ddof=1)
    rho = np.empty(n)
    rho[0] = 1.0
    rho[1:] = 1.0 - (w - acov[:, 1:].mean(axis=0)) / var_plus
    # Geyer initial positive sequence on paired sums, then monotone
    t = 0
    pair_sums = []
    while t + 1 < n:
        s = rho[t] + rho[t + 1]
        if s < 0:
            break
        pair_sums.append(s)
        t += 2
    pair_sums = np.minimum.accumulate(np.array(pair_sums)) if pair_sums else np.array([1.0])
    tau = -1.0 + 2.0 * pair_sums.sum()
    tau = max(tau, 1.0 / np.log10(c * n))
    return c * n / tau


def ess(draws) -> float:
    """Bulk effective sample size (rank-normalized, split chains)."""
    x = _split(_as_chains(draws))
    if _is_constant(x):
        warnings.warn("ESS undefined for constant draws", DiagnosticWarning, stacklevel=2)
        return float("nan")
    return float(_ess_raw(_rank_normalize(x)))


def mcse_mean(draws) -> float:
    """Monte-Carlo standard error of the posterior mean."""
    x = _as_chains(draws)
    e = _ess_raw(_split(x)) if not _is_constant(x) else np.inf
    return float(x.std(ddof=1) / np.sqrt(e))


def summarize(draws, names=None, probs=(0.025, 0.5, 0.975)):
    """Per-parameter summary table over pooled draws.

    ``draws`` is (chains, iterations, params). Returns a list of dicts with
    keys ``name, mean, sd, q2.5, q50, q97.5, rhat, ess``.
    """
    x = np.asarray(draws, dtype=float)
    if x.ndim == 2:
        x = x[None]
    c, n, p = x.shape
    names = list(names) if names is not None else [f"theta[{j}]" for j in range(p)]
    pooled = x.reshape(c * n, p)
    qs = np.quantile(pooled, probs, axis=0)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiagnosticWarning)
        for j in range(p):
            row = {
                "name": names[j],
                "mean": float(pooled[:, j].mean()),
                "sd": float(pooled[:, j].std(ddof=1)) if c * n > 1 else 0.0,
            }
            for pr, qv in zip(probs, qs[:, j]):
                row[f"q{100 * pr:g}"] = float(qv)
            if n >= 8:
                row["rhat"] = split_rhat(x[:, :, j])
                row["ess"] = ess(x[:, :, j])
            else:
                row["rhat"] = row["ess"] = float("nan")
            rows.append(row)
    return rows


def max_rhat(draws) -> float:
    """Largest finite R-hat across parameters; NaN columns are skipped."""
    x = np.asarray(draws, dtype=float)
    vals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DiagnosticWarning)
        for j in range(x.shape[2]):
            vals.append(split_rhat(x[:, :, j]))
    vals = np.array(vals)
    vals = vals[np.isfinite(vals)]
    return float(vals.max()) if vals.size else float("nan")

"""Command-line interface: ``zinhpp {simulate,fit,degree-sweep,compare,summarize}``.

Exit codes: 0 success, 2 validation error, 3 convergence failure, 4 I/O error.
Every command writes into a temporary sibling directory and renames it to
``--out`` only when complete, together with a ``manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .data import DatasetError, file_digest, read_adjacency, read_dataset
from .fit import (
    RHAT_LIMIT,
    area_effects,
    baseline_curve,
    fit_model,
    load_fit,
    write_fit,
    write_summary_csv,
)
from .selection import compare_models, psis_loo, waic, write_comparison_json
from .simulate import generate_replicas, write_replica

log = logging.getLogger("zinhpp")

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


class _AtomicDir:
    """Build an output directory under a temporary name, then swap it in."""

    def __init__(self, target):
        self.target = Path(target)

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.tmp-", dir=self.target.parent))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and not issubclass(exc_type, ConvergenceError):
            shutil.rmtree(self.tmp, ignore_errors=True)
            return False
        old = None
        if self.target.exists():
            old = self.target.with_name(f".{self.target.name}.old-{os.getpid()}")
            os.replace(self.target, old)
        os.replace(self.tmp, self.target)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)
        return False


def _write_manifest(out_dir, command, cfg: RunConfig | None, seed, inputs, started):
    digests = {}
    for p in inputs:
        p = Path(p)
        if p.is_file():
            digests[str(p)] = file_digest(p)
    manifest = {
        "command": command,
        "config_path": str(cfg.path) if cfg is not None and cfg.path else None,
        "config_sha256": cfg.digest if cfg is not None else None,
        "seed": seed,
        "inputs": digests,
        "software_version": __version__,
        "wall_time_seconds": round(time.perf_counter() - started, 3),
    }
    with open(Path(out_dir) / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _covariate_header(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return next(csv.reader(fh), [])


def load_dataset_dir(data_dir, spec):
    """Read ``events.csv`` (+ ``covariates.csv``, ``adjacency.csv``) from a directory."""
    d = Path(data_dir)
    events = d / "events.csv"
    if not events.is_file():
        raise FileNotFoundError(f"{events} not found")
    cov = d / "covariates.csv"
    adj = d / "adjacency.csv"
    graph = None
    if adj.is_file():
        graph = read_adjacency(adj)
    elif spec.variant.spatial:
        raise DatasetError([f"{spec.variant.value} needs an adjacency file ({adj})"])
    x_names, z_names = (), ()
    if cov.is_file():
        cols = [c.strip() for c in _covariate_header(cov) if c.strip() != "id"]
        z_names = spec.zero_covariates or tuple(c for c in cols if c.startswith("z"))
        x_names = spec.intensity_covariates or tuple(
            c for c in cols if c not in z_names and not c.startswith("z")
        )
    labels = graph.labels if graph is not None else None
    data = read_dataset(events, cov if cov.is_file() else None, x_names, z_names, labels)
    inputs = [p for p in (events, cov, adj) if p.is_file()]
    return data, graph, inputs


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args):
    started = time.perf_counter()
    cfg = _config(args.config)
    scenario = cfg.scenario(seed=args.seed)
    replicas = generate_replicas(scenario, jobs=args.jobs or 1)
    width = max(3, len(str(scenario.replications)))
    with _AtomicDir(args.out) as tmp:
        for data, graph, truth in replicas:
            write_replica(tmp / f"replica_{truth['replica'] + 1:0{width}d}", data, graph, truth)
        _write_manifest(tmp, "simulate", cfg, scenario.seed,
                        [args.config] if args.config else [], started)
    log.info("wrote %d replicas to %s", len(replicas), args.out)
    return EXIT_OK


def _model_overrides(args):
    return {"variant": getattr(args, "variant", None), "degree": getattr(args, "degree", None)}


def cmd_fit(args):
    started = time.perf_counter()
    cfg = _config(args.config)
    spec = cfg.model(**_model_overrides(args))
    sampler = cfg.sampler(seed=args.seed, jobs=args.jobs)
    data, graph, inputs = load_dataset_dir(args.dataset, spec)
    fit = fit_model(data, spec, graph, sampler)
    rhat = fit.max_rhat()
    converged = bool(np.isfinite(rhat) and rhat <= RHAT_LIMIT)
    with _AtomicDir(args.out) as tmp:
        write_fit(tmp, fit, {"dataset": str(args.dataset), "seed": sampler.seed})
        _write_manifest(tmp, "fit", cfg, sampler.seed,
                        inputs + ([args.config] if args.config else []), started)
        if not converged and not args.allow_nonconverged:
            raise ConvergenceError(f"max R-hat {rhat:.3f} exceeds {RHAT_LIMIT}")
    log.info("fit %s: max R-hat %.3f, %d divergences", spec.variant.value, rhat,
             fit.sample.divergences)
    return EXIT_OK


def _criterion(name, matrix, label):
    return (waic if name == "waic" else psis_loo)(matrix, label=label)


def cmd_degree_sweep(args):
    started = time.perf_counter()
    cfg = _config(args.config)
    degrees = sorted({int(v) for v in args.degrees.split(",") if v.strip()})
    if not degrees or degrees[0] < 1:
        raise ValueError("degrees must be integers >= 1")
    base = cfg.model(**_model_overrides(args) | {"degree": degrees[0]})
    if not base.variant.semiparametric:
        raise ValueError(f"degree sweep needs an SZI variant, got {base.variant.value}")
    sampler = cfg.sampler(seed=args.seed, jobs=args.jobs)
    data, graph, inputs = load_dataset_dir(args.dataset, base)
    rows = []
    for d in degrees:
        spec = cfg.model(**_model_overrides(args) | {"degree": d})
        fit = fit_model(data, spec, graph, sampler)
        mat = fit.pointwise_matrix()
        loo, w = psis_loo(mat), waic(mat)
        rows.append({"degree": d, "psis_loo": loo.value, "psis_loo_se": loo.se,
                     "waic": w.value, "p_eff": loo.p_eff, "n_k_flagged": loo.n_flagged,
                     "max_rhat": fit.max_rhat()})
        log.info("degree %d: PSIS-LOO %.2f", d, loo.value)
    best = min(rows, key=lambda r: r["psis_loo"])["degree"]
    with _AtomicDir(args.out) as tmp:
        with open(tmp / "degree_sweep.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            keys = list(rows[0])
            w.writerow(keys + ["best"])
            for r in rows:
                w.writerow([r[k] if k in ("degree", "n_k_flagged") else repr(float(r[k]))
                            for k in keys] + [int(r["degree"] == best)])
        with open(tmp / "degree_sweep.json", "w", encoding="utf-8") as fh:
            json.dump({"best_degree": best, "rows": rows}, fh, indent=2)
            fh.write("\n")
        _write_manifest(tmp, "degree-sweep", cfg, sampler.seed,
                        inputs + ([args.config] if args.config else []), started)
    print(f"best degree: {best}")
    return EXIT_OK


def cmd_compare(args):
    started = time.perf_counter()
    fits = [load_fit(d) for d in args.fits]
    labels = args.labels.split(",") if args.labels else [Path(d).name for d in args.fits]
    if len(labels) != len(fits):
        raise ValueError("one label per fit directory")
    reports = [_criterion(args.criterion, f.pointwise_matrix(), lab) for f, lab in zip(fits, labels)]
    rows = compare_models(reports)
    with _AtomicDir(args.out) as tmp:
        write_comparison_json(tmp / "comparison.json", rows, reports)
        with open(tmp / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        _write_manifest(tmp, "compare", None, None,
                        [Path(d) / "loglik.csv" for d in args.fits], started)
    for r in rows:
        print(f"{r['rank']:>3} {r['label']:<24} {r['value']:>14.2f} diff {r['diff']:>10.2f} "
              f"(se {r['diff_se']:.2f})")
    return EXIT_OK


def cmd_summarize(args):
    started = time.perf_counter()
    fit = load_fit(args.fit)
    t, mean, lo, hi = baseline_curve(fit, args.points)
    with _AtomicDir(args.out) as tmp:
        with open(tmp / "intensity_curve.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean", "lower", "upper"])
            for row in zip(t, mean, lo, hi):
                w.writerow([repr(float(v)) for v in row])
        if fit.spec.variant.spatial:
            m, lo_a, hi_a = area_effects(fit)
            labels = fit.area_labels or tuple(str(i + 1) for i in range(len(m)))
            with open(tmp / "area_effects.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["area", "exp_omega_mean", "lower", "upper"])
                for row in zip(labels, m, lo_a, hi_a):
                    w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        write_summary_csv(tmp / "parameters.csv", fit.summary())
        _write_manifest(tmp, "summarize", None, None,
                        [Path(args.fit) / "draws.csv"], started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="zinhpp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, jobs=True, config=True):
        if config:
            p.add_argument("--config", help="INI run configuration")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        if jobs:
            p.add_argument("--jobs", type=int, default=None,
                           help="parallel workers for chains/replicas")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="generate synthetic replica datasets")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one model to a dataset directory")
    p.add_argument("dataset", help="directory with events.csv, covariates.csv, adjacency.csv")
    common(p)
    p.add_argument("--variant", default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--allow-nonconverged", action="store_true",
                   help=f"exit 0 even if some R-hat exceeds {RHAT_LIMIT}")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("degree-sweep", help="PSIS-LOO over Bernstein degrees")
    p.add_argument("dataset")
    p.add_argument("--degrees", required=True, help="comma-separated degrees, e.g. 1,2,3,4,5")
    common(p)
    p.add_argument("--variant", default=None)
    p.set_defaults(func=cmd_degree_sweep)

    p = sub.add_parser("compare", help="rank fitted models by PSIS-LOO or WAIC")
    p.add_argument("fits", nargs="+", help="fit output directories")
    p.add_argument("--labels", default=None, help="comma-separated labels")
    p.add_argument("--criterion", choices=("psis-loo", "waic"), default="psis-loo")
    common(p, seed=False, jobs=False, config=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("summarize", help="plot-ready curves and area effects from a fit")
    p.add_argument("fit", help="fit output directory")
    p.add_argument("--points", type=int, default=200)
    common(p, seed=False, jobs=False, config=False)
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"zinhpp: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, DatasetError, ValueError, KeyError) as exc:
        print(f"zinhpp: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"zinhpp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

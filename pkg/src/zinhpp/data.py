"""Observed recurrent-event data, the areal adjacency graph, and CSV I/O.

Stratum indices are zero-based throughout the Python API; area labels from
the adjacency file are mapped onto ``0..L-1`` in sorted order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised when a dataset fails validation; carries every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Individual:
    """One subject under observation on ``(0, follow_up_end]``."""

    id: str
    follow_up_end: float
    event_times: np.ndarray
    intensity_covariates: np.ndarray = field(default_factory=lambda: _frozen_array([]))
    zero_covariates: np.ndarray = field(default_factory=lambda: _frozen_array([]))
    stratum: int = 0

    def __post_init__(self):
        object.__setattr__(self, "event_times", _frozen_array(self.event_times))
        object.__setattr__(
            self, "intensity_covariates", _frozen_array(self.intensity_covariates)
        )
        object.__setattr__(self, "zero_covariates", _frozen_array(self.zero_covariates))
        object.__setattr__(self, "follow_up_end", float(self.follow_up_end))
        object.__setattr__(self, "stratum", int(self.stratum))

    @property
    def n_events(self) -> int:
        return len(self.event_times)


@dataclass(frozen=True)
class RecurrentDataset:
    individuals: tuple
    x_names: tuple = ()
    z_names: tuple = ()
    n_strata: int = 1

    def __post_init__(self):
        object.__setattr__(self, "individuals", tuple(self.individuals))
        object.__setattr__(self, "x_names", tuple(self.x_names))
        object.__setattr__(self, "z_names", tuple(self.z_names))

    @property
    def m(self) -> int:
        return len(self.individuals)

    @property
    def p(self) -> int:
        return len(self.x_names)

    @property
    def q(self) -> int:
        return len(self.z_names)

    @property
    def time_horizon(self) -> float:
        """Largest follow-up time; the Bernstein support bound."""
        return max(ind.follow_up_end for ind in self.individuals)

    @property
    def n_events(self) -> np.ndarray:
        return np.array([ind.n_events for ind in self.individuals], dtype=np.int64)

    def x_matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        return self._matrix("intensity_covariates", self.x_names, names)

    def z_matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        return self._matrix("zero_covariates", self.z_names, names)

    def _matrix(self, attr, declared, names):
        full = np.array(
            [getattr(ind, attr) for ind in self.individuals], dtype=float
        ).reshape(self.m, len(declared))
        if names is None:
            return full
        idx = [declared.index(n) for n in names]
        return full[:, idx]

    def strata(self) -> np.ndarray:
        return np.array([ind.stratum for ind in self.individuals], dtype=np.int64)


def validate_dataset(raw: RecurrentDataset) -> RecurrentDataset:
    """Check a dataset and return its canonical form.

    Event times are sorted per individual. All violations are collected and
    raised together as a :class:`DatasetError`.
    """
    problems = []
    if raw.m < 1:
        problems.append("dataset has no individuals")
    if raw.n_strata < 1:
        problems.append("number of strata must be at least 1")
    seen = set()
    canonical = []
    for ind in raw.individuals:
        tag = f"individual {ind.id!r}"
        if ind.id in seen:
            problems.append(f"{tag}: duplicate id")
        seen.add(ind.id)
        y = ind.follow_up_end
        if not np.isfinite(y) or y <= 0:
            problems.append(f"{tag}: non-positive follow-up end {y}")
        times = np.sort(ind.event_times)
        if not np.all(np.isfinite(times)):
            problems.append(f"{tag}: non-finite event time")
        elif times.size:
            if times[0] <= 0:
                problems.append(f"{tag}: event at or before time 0")
            if times[-1] > y:
                problems.append(f"{tag}: event beyond follow-up ({times[-1]} > {y})")
            if np.any(np.diff(times) <= 0):
                problems.append(f"{tag}: tied event times")
        if not 0 <= ind.stratum < raw.n_strata:
            problems.append(f"{tag}: stratum {ind.stratum} out of range 0..{raw.n_strata - 1}")
        if len(ind.intensity_covariates) != raw.p:
            problems.append(
                f"{tag}: intensity covariate length {len(ind.intensity_covariates)} != {raw.p}"
            )
        if len(ind.zero_covariates) != raw.q:
            problems.append(
                f"{tag}: zero-inflation covariate length {len(ind.zero_covariates)} != {raw.q}"
            )
        for name, vec in (("intensity", ind.intensity_covariates), ("zero", ind.zero_covariates)):
            if not np.all(np.isfinite(vec)):
                problems.append(f"{tag}: non-finite {name} covariate")
        canonical.append(replace(ind, event_times=times))
    if problems:
        raise DatasetError(problems)
    return replace(raw, individuals=tuple(canonical))


class SpatialGraph:
    """Undirected areal adjacency structure used by the ICAR prior.

    Parameters
    ----------
    n_areas : int
        Number of areas ``L``.
    edges : iterable of (int, int)
        Zero-based undirected edges. Self-loops and duplicates are rejected.
    labels : sequence of str, optional
        External area labels, in index order.
    """

    def __init__(self, n_areas, edges, labels=None):
        self.n_areas = int(n_areas)
        clean = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on area {a}")
            if not (0 <= a < self.n_areas and 0 <= b < self.n_areas):
                raise ValueError(f"edge ({a}, {b}) outside 0..{self.n_areas - 1}")
            key = (min(a, b), max(a, b))
            if key in clean:
                raise ValueError(f"duplicate edge {key}")
            clean.add(key)
        self.edges = np.array(sorted(clean), dtype=np.int64).reshape(-1, 2)
        self.edges.setflags(write=False)
        self.labels = tuple(labels) if labels is not None else tuple(
            str(i + 1) for i in range(self.n_areas)
        )
        if len(self.labels) != self.n_areas:
            raise ValueError("labels length does not match number of areas")
        counts = np.zeros(self.n_areas, dtype=np.int64)
        np.add.at(counts, self.edges[:, 0], 1)
        np.add.at(counts, self.edges[:, 1], 1)
        counts.setflags(write=False)
        self.neighbor_count = counts
        self._components = None

    def __repr__(self):
        return f"SpatialGraph(n_areas={self.n_areas}, n_edges={len(self.edges)})"

    def __eq__(self, other):
        return (
            isinstance(other, SpatialGraph)
            and self.n_areas == other.n_areas
            and np.array_equal(self.edges, other.edges)
        )

    @classmethod
    def from_label_pairs(cls, pairs):
        """Build from labelled pairs; labels are sorted (numerically if possible)."""
        pairs = [(str(a), str(b)) for a, b in pairs]
        labels = sort_labels({x for pair in pairs for x in pair})
        index = {lab: i for i, lab in enumerate(labels)}
        return cls(len(labels), [(index[a], index[b]) for a, b in pairs], labels)

    @classmethod
    def lattice(cls, nrow, ncol):
        """Rook-adjacency grid with ``nrow * ncol`` areas in row-major order."""
        edges = []
        for r in range(nrow):
            for c in range(ncol):
                i = r * ncol + c
                if c + 1 < ncol:
                    edges.append((i, i + 1))
                if r + 1 < nrow:
                    edges.append((i, i + ncol))
        return cls(nrow * ncol, edges)

    @classmethod
    def path(cls, n):
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_areas, self.n_areas))
        A[self.edges[:, 0], self.edges[:, 1]] = 1.0
        A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def laplacian(self) -> np.ndarray:
        """Unit-precision ICAR structure matrix ``D - A``."""
        return np.diag(self.neighbor_count.astype(float)) - self.adjacency()

    def components(self) -> np.ndarray:
        """Connected-component label per area (labels ``0..C-1``)."""
        if self._components is None:
            parent = list(range(self.n_areas))

            def find(i):
                while parent[i] != i:
                    parent[i] = parent[parent[i]]
                    i = parent[i]
                return i

            for a, b in self.edges:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra
            roots = [find(i) for i in range(self.n_areas)]
            relabel = {}
            comp = np.array([relabel.setdefault(r, len(relabel)) for r in roots])
            comp.setflags(write=False)
            self._components = comp
        return self._components

    @property
    def n_components(self) -> int:
        return int(self.components().max()) + 1 if self.n_areas else 0


def sort_labels(labels):
    labels = list(labels)
    try:
        return sorted(labels, key=lambda s: (float(s), s))
    except ValueError:
        return sorted(labels)


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

EVENTS_HEADER = ["id", "stratum", "follow_up_end", "event_time"]


def read_adjacency(path) -> SpatialGraph:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"area_a", "area_b"} <= set(reader.fieldnames):
            raise DatasetError([f"{path}: expected header area_a,area_b"])
        pairs = [(row["area_a"].strip(), row["area_b"].strip()) for row in reader]
    return SpatialGraph.from_label_pairs(pairs)


def write_adjacency(graph: SpatialGraph, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["area_a", "area_b"])
        for a, b in graph.edges:
            w.writerow([graph.labels[a], graph.labels[b]])


def read_dataset(
    events_path,
    covariates_path=None,
    x_names=(),
    z_names=(),
    area_labels=None,
) -> RecurrentDataset:
    """Load the events and covariates CSV files into a validated dataset.

    ``area_labels`` fixes the stratum label order (normally the adjacency
    graph labels); otherwise labels found in the events file are sorted.
    """
    problems = []
    rows = {}
    order = []
    with open(events_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != EVENTS_HEADER:
            raise DatasetError([f"{events_path}: expected header {','.join(EVENTS_HEADER)}"])
        for lineno, row in enumerate(reader, start=2):
            pid = row["id"].strip()
            try:
                y = float(row["follow_up_end"])
                t = row["event_time"].strip()
                t = float(t) if t else None
            except ValueError:
                problems.append(f"{events_path}:{lineno}: unparseable number")
                continue
            rec = rows.get(pid)
            if rec is None:
                rec = rows[pid] = {"stratum": row["stratum"].strip(), "y": y, "times": []}
                order.append(pid)
            elif rec["stratum"] != row["stratum"].strip() or rec["y"] != y:
                problems.append(f"{events_path}:{lineno}: inconsistent stratum/follow-up for {pid!r}")
            if t is not None:
                rec["times"].append(t)
    if problems:
        raise DatasetError(problems)

    labels = list(area_labels) if area_labels is not None else sort_labels(
        {r["stratum"] for r in rows.values()}
    )
    index = {lab: i for i, lab in enumerate(labels)}

    covs = {}
    if covariates_path is not None:
        with open(covariates_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = set(reader.fieldnames or [])
            missing = [c for c in ("id", *x_names, *z_names) if c not in fields]
            if missing:
                raise DatasetError([f"{covariates_path}: missing columns {missing}"])
            for lineno, row in enumerate(reader, start=2):
                try:
                    covs[row["id"].strip()] = (
                        [float(row[c]) for c in x_names],
                        [float(row[c]) for c in z_names],
                    )
                except ValueError:
                    problems.append(f"{covariates_path}:{lineno}: unparseable covariate")
    elif x_names or z_names:
        raise DatasetError(["covariates declared but no covariates file given"])

    individuals = []
    for pid in order:
        rec = rows[pid]
        if rec["stratum"] not in index:
            problems.append(f"individual {pid!r}: unknown area label {rec['stratum']!r}")
            continue
        if x_names or z_names:
            if pid not in covs:
                problems.append(f"individual {pid!r}: no covariate row")
                continue
            xv, zv = covs[pid]
        else:
            xv, zv = [], []
        individuals.append(
            Individual(pid, rec["y"], rec["times"], xv, zv, index[rec["stratum"]])
        )
    if problems:
        raise DatasetError(problems)
    return validate_dataset(
        RecurrentDataset(individuals, x_names, z_names, n_strata=len(labels))
    )


def write_dataset(data: RecurrentDataset, events_path, covariates_path=None, area_labels=None):
    labels = area_labels if area_labels is not None else [str(i + 1) for i in range(data.n_strata)]
    with open(events_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for ind in data.individuals:
            lab = labels[ind.stratum]
            y = repr(float(ind.follow_up_end))
            if ind.n_events == 0:
                w.writerow([ind.id, lab, y, ""])
            for t in ind.event_times:
                w.writerow([ind.id, lab, y, repr(float(t))])
    if covariates_path is not None:
        with open(covariates_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", *data.x_names, *data.z_names])
            for ind in data.individuals:
                w.writerow(
                    [ind.id]
                    + [repr(float(v)) for v in ind.intensity_covariates]
                    + [repr(float(v)) for v in ind.zero_covariates]
                )


def file_digest(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()

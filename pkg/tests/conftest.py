import numpy as np
import pytest
from hypothesis import settings

from zinhpp.data import Individual, RecurrentDataset, SpatialGraph, validate_dataset
from zinhpp.model import ModelSpec, Variant

settings.register_profile("ci", max_examples=50, deadline=None, derandomize=True)
settings.load_profile("ci")


def make_toy(seed=0, m=10, n_areas=4, horizon=5.0, p=2, q=1):
    """Small random dataset on a path graph; every area is used."""
    rng = np.random.default_rng(seed)
    individuals = []
    for i in range(m):
        y = horizon if i % 3 else horizon * rng.uniform(0.6, 1.0)
        n = rng.poisson(2.0) if i % 4 else 0
        times = np.sort(rng.uniform(0.05, y, size=n))
        individuals.append(Individual(
            f"id{i}", y, times, rng.normal(size=p), rng.normal(size=q), i % n_areas,
        ))
    data = validate_dataset(RecurrentDataset(
        individuals, tuple(f"x{k + 1}" for k in range(p)), tuple(f"z{k + 1}" for k in range(q)),
        n_areas,
    ))
    return data, SpatialGraph.path(n_areas)


def spec_for(variant, degree=4):
    v = Variant.parse(variant)
    if v.semiparametric:
        return ModelSpec(v, degree)
    if v.logistic_pi:
        return ModelSpec(v, intensity_covariates=("x1", "x2"), zero_covariates=("z1",))
    return ModelSpec(v)


def random_point(layout, rng, scale=0.7):
    """Random unconstrained point with a centred frailty block."""
    u = rng.normal(scale=scale, size=layout.dim)
    if "omega" in layout:
        sl = layout["omega"].slice
        u[sl] -= u[sl].mean()
    return u


def central_diff(f, u, h=1e-4):
    """Five-point central difference gradient."""
    g = np.zeros_like(u)
    for j in range(len(u)):
        e = np.zeros_like(u)
        e[j] = h
        g[j] = (-f(u + 2 * e) + 8 * f(u + e) - 8 * f(u - e) + f(u - 2 * e)) / (12 * h)
    return g


ALL_VARIANTS = [v.value for v in Variant]


@pytest.fixture
def toy():
    return make_toy()


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config._criterion_lines

    def _report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

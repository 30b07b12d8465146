"""Compare the compiled and NumPy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Reports the median time
per call of each kernel and of a full log-posterior gradient evaluation on a
simulated 300-individual spatial dataset.
"""
import argparse
import timeit

import numpy as np

from zinhpp import kernels
from zinhpp.model import ModelSpec
from zinhpp.priors import Posterior
from zinhpp.simulate import ScenarioConfig, generate_dataset, replica_rng


def _median_time(fn, number, repeat=7):
    return float(np.median(timeit.repeat(fn, number=number, repeat=repeat)) / number)


def kernel_inputs(m=300, e=15000, d=10, seed=0):
    rng = np.random.default_rng(seed)
    n = rng.multinomial(e, np.full(m, 1.0 / m)).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(n)]).astype(np.int64)
    owner = np.repeat(np.arange(m, dtype=np.int64), n)
    basis = np.ascontiguousarray(rng.uniform(0.01, 1.0, size=(e, d)))
    gamma = rng.uniform(0.5, 2.0, size=d)
    s0, log_cum0, eta, u = (rng.normal(size=m) for _ in range(4))
    edges = np.array([(i, i + 1) for i in range(131)], dtype=np.int64)
    omega = rng.normal(size=132)
    return {
        "mixture_terms": (n, s0, log_cum0, eta, u, True),
        "bernstein_event_terms": (basis, gamma, owner, offsets),
        "icar_quadratic": (omega, edges),
    }


def posterior_call(backend, variant, degree=None):
    cfg = ScenarioConfig(n=300)
    data, graph, _ = generate_dataset(cfg, replica_rng(0, 0))
    post = Posterior(data, ModelSpec(variant, degree=degree), graph)
    saved = {k: getattr(kernels, k) for k in ("mixture_terms", "bernstein_event_terms", "icar_quadratic")}
    # the likelihood looks kernels up through the module, so swap them there
    for k in saved:
        setattr(kernels, k, getattr(backend, k))
    u = post.initial_point(np.random.default_rng(1), 0.5)
    try:
        t = _median_time(lambda: post(u), number=200)
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)
    return t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    inputs = kernel_inputs()
    print(f"backends available: {', '.join(backends)} (active: {kernels.BACKEND})")
    print(f"{'kernel':<28}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, call_args in inputs.items():
        times = [_median_time(lambda f=getattr(b, name): f(*call_args), args.number)
                 for b in backends.values()]
        speed = times[0] / times[-1] if len(times) > 1 else 1.0
        print(f"{name:<28}" + "".join(f"{t * 1e6:>12.1f}us" for t in times) + f"{speed:>9.1f}x")
    for variant, degree in (("ZI-NHPP-SE", None), ("SZI-NHPP-SE", 10)):
        times = [posterior_call(b, variant, degree) for b in backends.values()]
        speed = times[0] / times[-1] if len(times) > 1 else 1.0
        label = f"posterior {variant}" + (f" d={degree}" if degree else "")
        print(f"{label:<28}" + "".join(f"{t * 1e6:>12.1f}us" for t in times) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()

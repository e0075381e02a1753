"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--iters 5000]

Reports the best-of-N wall time per kernel and for an end-to-end alg3 run,
and checks that both backends return bit-identical results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ftopt import kernels
from ftopt.adversary import OppositeExtreme
from ftopt.config import mixed_functions, random_init
from ftopt.engine import ScenarioConfig, run_sync
from ftopt.protocol import StepSchedule

NAMES = ("trimmed_round", "envelope_bounds", "displaced_mean")


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def use(mod) -> None:
    for name in NAMES:
        setattr(kernels, name, getattr(mod, name))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iters", type=int, default=5000, help="alg3 rounds for the end-to-end case")
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    W = rng.normal(size=(5, 7))
    G = rng.normal(size=(5, 7))
    Gb = rng.normal(size=(2000, 10))
    w, g = rng.normal(size=10), rng.normal(size=10)
    cases = {
        "trimmed_round 5x7 (x2000)": lambda k: [k.trimmed_round(W, G, 2, 0.1) for _ in range(2000)],
        "envelope_bounds 2000x10": lambda k: k.envelope_bounds(Gb, 1 / 16, 8),
        "displaced_mean n=10 (x20000)": lambda k: [k.displaced_mean(w, g, 0.1) for _ in range(20000)],
    }
    py, cc = kernels.python_backend, kernels.compiled_backend
    assert all(np.array_equal(a, b) for a, b in zip(py.trimmed_round(W, G, 2, 0.1),
                                                    cc.trimmed_round(W, G, 2, 0.1)))
    assert all(np.array_equal(a, b) for a, b in zip(py.envelope_bounds(Gb, 1 / 16, 8),
                                                    cc.envelope_bounds(Gb, 1 / 16, 8)))

    print(f"{'case':<34}{'python':>11}{'compiled':>11}{'speedup':>9}")
    for label, run in cases.items():
        tp = best_of(lambda: run(py), args.repeat)
        tc = best_of(lambda: run(cc), args.repeat)
        print(f"{label:<34}{tp:>10.4f}s{tc:>10.4f}s{tp / tc:>8.1f}x")

    n = 7
    cfg = ScenarioConfig(n=n, f=2, protocol="alg3", functions=mixed_functions(n, 0),
                         init_estimates=random_init(n, 0), schedule=StepSchedule.harmonic(1),
                         max_iters=args.iters, faulty_ids={5, 6}, adversary=OppositeExtreme())
    saved = {name: getattr(kernels, name) for name in NAMES}
    times, digests = {}, {}
    for label, mod in (("python", py), ("compiled", cc)):
        use(mod)
        times[label] = best_of(lambda: run_sync(cfg), max(1, args.repeat // 2))
        digests[label] = run_sync(cfg).digest()
    for name, fn in saved.items():
        setattr(kernels, name, fn)
    label = f"alg3 end-to-end ({args.iters} rounds)"
    print(f"{label:<34}{times['python']:>10.4f}s{times['compiled']:>10.4f}s"
          f"{times['python'] / times['compiled']:>8.1f}x")
    print("traces identical:", digests["python"] == digests["compiled"])


if __name__ == "__main__":
    main()

"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--m 2000 20000] [--repeat 5] [--json out.json]

Each kernel is timed on the same inputs under both backends; the end-to-end
row runs a short QuantumBoost loop with the backend swapped in place.
"""

import argparse
import json
import sys
import timeit
from contextlib import contextmanager

import numpy as np

from boostlab import _backend
from boostlab.boosting import run_quantumboost
from boostlab.learners import PlantedLearner
from boostlab.rng import substream
from boostlab.tasks import SyntheticTask, generate_task


@contextmanager
def backend(module):
    saved = _backend._impl
    _backend._impl = module
    try:
        yield
    finally:
        _backend._impl = saved


def kernel_cases(m, rng):
    a = rng.random(m)
    b = rng.random(m) + 1e-3
    T = 200
    loss = (rng.random((T, m)) < 0.5).astype(np.uint8)
    caps = np.where(np.arange(T) % 10 == 9, 1.3, 0.0)
    idx = np.arange(m, dtype=np.int64)
    return {
        "ksum": lambda k: k.ksum(a),
        "capped_sum": lambda k: k.capped_sum(a, 1.7),
        "kl_sum": lambda k: k.kl_sum(a, b),
        "re_sum": lambda k: k.re_sum(a / a.sum(), b / b.sum()),
        "implicit_eval": lambda k: k.implicit_eval(loss, caps, T, 0.1, 0.9, idx),
    }


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(m):
    S = generate_task(SyntheticTask("junta", n=20, k=3, seed=0), m)
    learner = PlantedLearner.seeded(0.1, m, substream(0, "learner"))
    return lambda: run_quantumboost(S, learner, 0.1, 0.1, "exact-pass", T=200, seed=0)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m", type=int, nargs="+", default=[2000, 20000])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write the results here")
    args = p.parse_args(argv)

    backends = _backend.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy fallback only", file=sys.stderr)
    rng = np.random.default_rng(0)
    results = []
    for m in args.m:
        cases = kernel_cases(m, rng)
        for name, call in cases.items():
            row = {"kernel": name, "m": m}
            for bname, module in backends.items():
                row[bname] = best_time(lambda: call(module), args.repeat)
            results.append(row)
        run = end_to_end(m)
        row = {"kernel": "quantumboost T=200", "m": m}
        for bname, module in backends.items():
            with backend(module):
                row[bname] = best_time(run, max(1, args.repeat // 2))
        results.append(row)

    names = list(backends)
    header = f"{'kernel':<20}{'m':>8}" + "".join(f"{n + ' (s)':>14}" for n in names)
    if "cython" in names:
        header += f"{'speedup':>10}"
    print(header)
    for row in results:
        line = f"{row['kernel']:<20}{row['m']:>8}" + "".join(f"{row[n]:>14.3e}" for n in names)
        if "cython" in names:
            line += f"{row['python'] / row['cython']:>9.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())

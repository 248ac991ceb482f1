"""Benchmark the compiled edit-distance kernels against the pure-Python twin.

Runs the three kernels on workloads shaped like the package's real ones
(pairwise tables, bounded scans, min-distance-to-class) and prints the
per-backend throughput.  Imports both modules directly, so the result does
not depend on RNNVERIFY_PURE.

    python3 benchmarks/bench_editdist.py [--pairs N] [--length N] [--repeats N]
"""

import argparse
import time

import numpy as np

from rnnverify import _editdist_py

try:
    from rnnverify import _editdist
except ImportError:
    _editdist = None


def random_strings(rng, count, length):
    bits = rng.integers(0, 2, size=(count, length))
    return ["".join("1" if b else "0" for b in row) for row in bits]


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        n = fn()
        best = min(best, time.perf_counter() - t0)
    return n / best


def bench_backend(mod, pairs, candidates, bound):
    def pairwise():
        for a, b in pairs:
            mod.levenshtein(a, b)
        return len(pairs)

    def bounded():
        for a, b in pairs:
            mod.levenshtein_bounded(a, b, bound)
        return len(pairs)

    xs = [a for a, _ in pairs[:64]]

    def min_to_set():
        for x in xs:
            mod.min_distance_bounded(x, candidates, len(x))
        return len(xs) * len(candidates)

    return pairwise, bounded, min_to_set


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000, help="string pairs per run")
    ap.add_argument("--length", type=int, default=16, help="string length")
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats (best kept)")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    left = random_strings(rng, args.pairs, args.length)
    right = random_strings(rng, args.pairs, args.length)
    pairs = list(zip(left, right))
    candidates = random_strings(rng, 200, args.length)
    bound = 2

    backends = [("pure-python", _editdist_py)]
    if _editdist is not None:
        backends.append(("compiled", _editdist))
    else:
        print("compiled backend not built; timing pure-python only")

    # both backends must agree before the numbers mean anything
    if _editdist is not None:
        for a, b in pairs[:300]:
            assert _editdist.levenshtein(a, b) == _editdist_py.levenshtein(a, b)
            assert _editdist.levenshtein_bounded(a, b, bound) == \
                _editdist_py.levenshtein_bounded(a, b, bound)

    names = ["levenshtein", f"levenshtein_bounded(b={bound})", "min_distance_bounded"]
    results = {}
    for label, mod in backends:
        rates = []
        for name, fn in zip(names, bench_backend(mod, pairs, candidates, bound)):
            rates.append(time_call(fn, args.repeats))
        results[label] = rates

    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{label:>14}" for label, _ in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(f"string length {args.length}, {args.pairs} pairs, best of {args.repeats}")
    print(header)
    for i, name in enumerate(names):
        row = f"{name:<{width}}  "
        row += "  ".join(f"{results[label][i]:>11.0f}/s" for label, _ in backends)
        if len(backends) == 2:
            row += f"  {results['compiled'][i] / results['pure-python'][i]:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()

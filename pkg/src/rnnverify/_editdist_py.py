"""Pure Python edit-distance kernels.

Reference implementation and fallback for the compiled module in
_editdist.pyx; _native picks whichever is available.  Both expose the same
three functions and must agree exactly.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance (insertions, deletions, substitutions)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a, start=1):
        cur[0] = i
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[len(b)]


def levenshtein_bounded(a: str, b: str, bound: int) -> int:
    """Levenshtein distance capped at bound: returns min(d, bound + 1).

    Only cells within bound of the diagonal can matter, so the DP runs in a
    band and bails out as soon as every cell in a row exceeds the bound.
    """
    if bound < 0:
        return 0 if a == b else 1
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la < lb:
        a, b, la, lb = b, a, lb, la
    if la - lb > bound:
        return bound + 1
    big = bound + 1
    prev = [j if j <= bound else big for j in range(lb + 1)]
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        lo = max(1, i - bound)
        hi = min(lb, i + bound)
        cur[lo - 1] = i if (lo - 1) >= i - bound and i <= bound else big
        row_min = cur[lo - 1]
        ca = a[i - 1]
        for j in range(lo, hi + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = prev[j - 1] + cost
            if j - 1 >= lo - 1 and cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if j <= i - 1 + bound and prev[j] + 1 < best:
                best = prev[j] + 1
            if best > big:
                best = big
            cur[j] = best
            if best < row_min:
                row_min = best
        if hi < lb:
            cur[hi + 1] = big
        if row_min > bound:
            return big
        prev, cur = cur, prev
    d = prev[lb]
    return d if d <= bound else big


def min_distance_bounded(x: str, candidates, upper: int, stop_at: int = 0) -> int:
    """Smallest Levenshtein distance from x to any candidate, capped at upper.

    Returns min(true minimum, upper).  Scans with a shrinking bound and
    stops early once the minimum cannot improve below stop_at.
    """
    best = upper
    for c in candidates:
        if best <= stop_at:
            break
        d = levenshtein_bounded(x, c, best - 1)
        if d < best:
            best = d
    return best

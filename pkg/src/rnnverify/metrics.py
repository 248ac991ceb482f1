"""Edit-distance complexity of regular languages.

The headline quantity: for a grammar and string length N, take every string
of length N, split by label, and measure the mean distance from each string
to the nearest string of the opposite class.  Averaging the two class means
gives a single per-length complexity score; languages whose score stays at
1 or near 1 as N grows are the ones where tiny perturbations cross the
decision boundary.

Two distance variants are supported.  "substitution" restricts the distance
to same-length substitutions (flip bits only) and is the default scoring
mode; "levenshtein" is the full insert/delete/substitute distance.  For
same-length binary strings the two coincide at d=1 (an insertion or
deletion changes the length), so the score only differs when the nearest
opposite string is further away.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

from . import _native
from ._util import write_text_atomic
from .automata import Dfa, tomita_dfa

# LUT popcount: index with ints below 2**16
_POP16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.uint8)

# strings are packed into int64; lengths beyond this would overflow memory
# long before the packing does
MAX_EXHAUSTIVE_LENGTH = 26


class ComplexityClass(enum.Enum):
    """How the per-length score behaves as N grows."""

    UNBOUNDED = "unbounded"
    BOUNDED_ABOVE_ONE = "bounded_above_one"
    EQUAL_ONE = "equal_one"


_COMPLEXITY = {
    1: ComplexityClass.UNBOUNDED,
    2: ComplexityClass.UNBOUNDED,
    3: ComplexityClass.BOUNDED_ABOVE_ONE,
    4: ComplexityClass.BOUNDED_ABOVE_ONE,
    5: ComplexityClass.EQUAL_ONE,
    6: ComplexityClass.EQUAL_ONE,
    7: ComplexityClass.UNBOUNDED,
}


def complexity_class(grammar_id: int) -> ComplexityClass:
    if grammar_id not in _COMPLEXITY:
        raise ValueError(f"unknown grammar id {grammar_id}; expected 1..7")
    return _COMPLEXITY[grammar_id]


@dataclass(frozen=True)
class DistanceReport:
    """Per-(grammar, length) distance summary."""

    grammar_id: int | str
    length: int
    d_pos: float
    d_neg: float
    d_avg: float
    pos_count: int
    neg_count: int
    ops: str = "substitution"


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit-cost insert, delete and substitute."""
    return _native.levenshtein(a, b)


def min_distance_to_set(x: str, strings) -> int:
    """Distance from x to the nearest member of a non-empty string set."""
    strings = list(strings)
    if not strings:
        raise ValueError("min_distance_to_set needs a non-empty set")
    upper = max(len(x), max(len(s) for s in strings))
    return _native.min_distance_bounded(x, strings, upper, stop_at=0)


def _classify_all_packed(dfa: Dfa, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Split all length-n binary strings (packed as ints, MSB = first char)
    into (positives, negatives) by running the DFA over every bit position."""
    if dfa.alphabet != ("0", "1"):
        raise ValueError("exhaustive scoring needs the binary alphabet")
    if n > MAX_EXHAUSTIVE_LENGTH:
        raise ValueError(
            f"length {n} too large for exhaustive scoring "
            f"(limit {MAX_EXHAUSTIVE_LENGTH})"
        )
    total = 1 << n
    ints = np.arange(total, dtype=np.int64)
    states = np.full(total, dfa.start, dtype=np.int64)
    table = np.array(dfa.transitions, dtype=np.int64)
    for pos in range(n - 1, -1, -1):
        bits = (ints >> pos) & 1
        states = table[states, bits]
    acc = np.zeros(dfa.num_states, dtype=bool)
    acc[list(dfa.accepting)] = True
    mask = acc[states]
    return ints[mask], ints[~mask]


def _popcount(arr: np.ndarray) -> np.ndarray:
    lo = _POP16[arr & 0xFFFF]
    hi = _POP16[(arr >> 16) & 0xFFFF]
    return lo.astype(np.int64) + hi


def _min_flip_distances(xs: np.ndarray, ys: np.ndarray, n: int) -> np.ndarray:
    """For each packed string in xs, the minimum Hamming distance to ys.

    Checks all single-bit flips first (resolves most strings), then falls
    back to chunked pairwise popcounts for the rest.
    """
    mins = np.full(len(xs), n + 1, dtype=np.int64)
    ys_sorted = np.sort(ys)
    for k in range(n):
        hit = np.isin(xs ^ (np.int64(1) << k), ys_sorted, assume_unique=False)
        mins[hit] = 1
    rest = np.nonzero(mins > 1)[0]
    if len(rest) == 0:
        return mins
    chunk = max(1, (1 << 22) // max(1, len(ys)))
    for i in range(0, len(rest), chunk):
        block = xs[rest[i : i + chunk]]
        diff = block[:, None] ^ ys[None, :]
        mins[rest[i : i + chunk]] = _popcount(diff).min(axis=1)
    return mins


def _packed_to_str(x: int, n: int) -> str:
    return format(x, f"0{n}b") if n else ""


def _class_mean_distance(
    xs: np.ndarray, ys: np.ndarray, n: int, ops: str
) -> float:
    """Mean over xs of the minimum distance to ys; exact integer sum."""
    flip_mins = _min_flip_distances(xs, ys, n)
    if ops == "substitution":
        return int(flip_mins.sum()) / len(xs)

    # full Levenshtein: a flip minimum of d is an upper bound, and for
    # d <= 2 it is exact (same-length distance 1 needs a substitution, so
    # below-2 improvements are impossible)
    total = 0
    ys_strs: list[str] | None = None
    for x, fm in zip(xs, flip_mins):
        fm = int(fm)
        if fm <= 2:
            total += fm
            continue
        if ys_strs is None:
            ys_strs = [_packed_to_str(int(y), n) for y in ys]
        d = _native.min_distance_bounded(
            _packed_to_str(int(x), n), ys_strs, fm, stop_at=2
        )
        total += d
    return total / len(xs)


def average_edit_distance_at_n(
    grammar: int | Dfa, n: int, ops: str = "substitution"
) -> DistanceReport | None:
    """Score one grammar at one length; None when a class is empty there.

    ops="substitution" reproduces the reference per-length complexity grid;
    ops="levenshtein" uses the unrestricted edit distance.
    """
    if ops not in ("substitution", "levenshtein"):
        raise ValueError(f"unknown ops mode {ops!r}")
    if n < 1:
        raise ValueError("length must be at least 1")
    if isinstance(grammar, Dfa):
        dfa, gid = grammar, "external"
    else:
        dfa, gid = tomita_dfa(grammar), grammar
    pos, neg = _classify_all_packed(dfa, n)
    if len(pos) == 0 or len(neg) == 0:
        return None
    d_pos = _class_mean_distance(pos, neg, n, ops)
    d_neg = _class_mean_distance(neg, pos, n, ops)
    return DistanceReport(
        grammar_id=gid,
        length=n,
        d_pos=d_pos,
        d_neg=d_neg,
        d_avg=(d_pos + d_neg) / 2.0,
        pos_count=len(pos),
        neg_count=len(neg),
        ops=ops,
    )


def distance_grid(
    grammars, lengths, ops: str = "substitution"
) -> list[DistanceReport]:
    """Score every (grammar, length) pair; undefined combinations are skipped."""
    reports = []
    for g in grammars:
        for n in lengths:
            rep = average_edit_distance_at_n(g, n, ops=ops)
            if rep is not None:
                reports.append(rep)
    return reports


def distance_reports_to_csv(reports, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grammar", "N", "d_pos", "d_neg", "d_avg"])
    for r in reports:
        writer.writerow(
            [r.grammar_id, r.length, f"{r.d_pos:.6f}", f"{r.d_neg:.6f}", f"{r.d_avg:.6f}"]
        )
    write_text_atomic(path, buf.getvalue())

"""DFA extraction from hidden-state trajectories.

Pipeline: record the hidden states a trained network visits on the training
strings, cluster them with k-means, read transition counts off consecutive
(state, symbol, state) triples, keep the majority transition per cluster
and symbol, then minimize the resulting automaton.

Clustering runs on raw hidden vectors, initial state included, so the start
state of the extracted automaton is the cluster holding h0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .automata import BINARY_ALPHABET, NEGATIVE, POSITIVE, Dfa, minimize
from .rnn.model import HiddenTrace, RnnModel, record_traces


class ExtractionError(RuntimeError):
    """A pipeline stage failed; .stage names which one."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"extraction stage {stage!r}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class ExtractionConfig:
    k: int
    kmeans_seed: int = 0
    kmeans_max_iters: int = 100
    restarts: int = 5

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.kmeans_max_iters < 1:
            raise ValueError("kmeans_max_iters must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


@dataclass
class KmeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    wcss: float
    k: int  # effective cluster count, <= requested


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # squared distances via the expansion trick; argmin breaks ties toward
    # the lowest cluster id
    d2 = (
        (points * points).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    return d2.argmin(axis=1)


def _plusplus_seed(points, k, rng):
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a centroid; reuse any
            centroids[j] = points[int(rng.integers(n))]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r))
        idx = min(idx, n - 1)
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(points, k, rng, max_iters):
    centroids = _plusplus_seed(points, k, rng)
    assignments = _assign(points, centroids)
    for _ in range(max_iters):
        for j in range(k):
            mask = assignments == j
            if mask.any():
                centroids[j] = points[mask].mean(axis=0)
        # revive empty clusters at the points farthest from their centroid
        empties = [j for j in range(k) if not (assignments == j).any()]
        if empties:
            dists = ((points - centroids[assignments]) ** 2).sum(axis=1)
            order = np.argsort(-dists, kind="stable")
            for slot, j in enumerate(empties):
                centroids[j] = points[order[slot]]
        new_assignments = _assign(points, centroids)
        if np.array_equal(new_assignments, assignments) and not empties:
            break
        assignments = new_assignments
    wcss = float(((points - centroids[assignments]) ** 2).sum())
    return assignments, centroids, wcss


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    restarts: int = 5,
) -> KmeansResult:
    """Best-of-restarts k-means with k-means++ seeding.

    The restart with the lowest within-cluster sum of squares wins; exact
    ties keep the earliest restart.  When the data has fewer distinct
    points than k, k drops to the distinct count.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty 2-d array")
    distinct = len(np.unique(points, axis=0))
    k_eff = min(k, distinct)
    if k_eff < 1:
        raise ValueError("need at least one distinct point")

    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        assignments, centroids, wcss = _lloyd(points, k_eff, rng, max_iters)
        if best is None or wcss < best.wcss:
            best = KmeansResult(
                assignments=assignments, centroids=centroids, wcss=wcss, k=k_eff
            )
    return best


@dataclass
class Quantization:
    """Cluster ids for every hidden state of every trace."""

    assignments: list[np.ndarray]  # one array of length T_i + 1 per trace
    centroids: np.ndarray
    wcss: float
    k: int


def quantize(traces: list[HiddenTrace], cfg: ExtractionConfig) -> Quantization:
    if not traces:
        raise ValueError("no traces to quantize")
    points = np.concatenate([t.states for t in traces], axis=0)
    result = kmeans(
        points,
        cfg.k,
        seed=cfg.kmeans_seed,
        max_iters=cfg.kmeans_max_iters,
        restarts=cfg.restarts,
    )
    out = []
    offset = 0
    for t in traces:
        n = len(t.states)
        out.append(result.assignments[offset : offset + n].copy())
        offset += n
    return Quantization(
        assignments=out, centroids=result.centroids, wcss=result.wcss, k=result.k
    )


@dataclass
class TransitionDiagram:
    """Raw transition counts between clusters, before pruning."""

    num_clusters: int
    alphabet: tuple[str, ...]
    counts: dict[tuple[int, str, int], int]
    initial_cluster: int
    # cluster -> {label: votes}; votes come from the network's prediction
    # on strings whose final state landed in the cluster
    final_votes: dict[int, dict[int, int]] = field(default_factory=dict)


def build_diagram(
    traces: list[HiddenTrace], quant: Quantization
) -> TransitionDiagram:
    if len(traces) != len(quant.assignments):
        raise ValueError("traces and assignments do not line up")
    initials = {int(a[0]) for a in quant.assignments}
    if len(initials) != 1:
        raise ValueError(
            f"initial states landed in {len(initials)} different clusters"
        )
    counts: dict[tuple[int, str, int], int] = {}
    votes: dict[int, dict[int, int]] = {}
    for trace, assign in zip(traces, quant.assignments):
        if len(assign) != len(trace.string) + 1:
            raise ValueError("assignment length does not match trace length")
        for t, ch in enumerate(trace.string):
            key = (int(assign[t]), ch, int(assign[t + 1]))
            counts[key] = counts.get(key, 0) + 1
        final = int(assign[-1])
        votes.setdefault(final, {NEGATIVE: 0, POSITIVE: 0})
        votes[final][trace.prediction] += 1
    return TransitionDiagram(
        num_clusters=quant.k,
        alphabet=BINARY_ALPHABET,
        counts=counts,
        initial_cluster=int(initials.pop()),
        final_votes=votes,
    )


def prune_to_dfa(diagram: TransitionDiagram) -> Dfa:
    """Keep the most-frequent transition per (cluster, symbol).

    Count ties keep the lowest destination id.  A (cluster, symbol) pair
    never observed in the traces goes to a fresh rejecting sink state (added
    only when needed).  A cluster accepts when strictly more positive than
    negative predictions ended there.
    """
    k = diagram.num_clusters
    by_src: dict[tuple[int, str], list[tuple[int, int]]] = {}
    for (src, sym, dst), c in diagram.counts.items():
        by_src.setdefault((src, sym), []).append((c, dst))

    need_sink = any(
        (s, sym) not in by_src for s in range(k) for sym in diagram.alphabet
    )
    num_states = k + 1 if need_sink else k
    sink = k

    transitions = []
    for s in range(num_states):
        row = []
        for sym in diagram.alphabet:
            if s == sink and need_sink:
                row.append(sink)
                continue
            options = by_src.get((s, sym))
            if not options:
                row.append(sink)
            else:
                best_count = max(c for c, _ in options)
                row.append(min(d for c, d in options if c == best_count))
        transitions.append(tuple(row))

    accepting = frozenset(
        s
        for s, v in diagram.final_votes.items()
        if v.get(POSITIVE, 0) > v.get(NEGATIVE, 0)
    )
    return Dfa(
        num_states=num_states,
        alphabet=diagram.alphabet,
        transitions=tuple(transitions),
        start=diagram.initial_cluster,
        accepting=accepting,
    )


@dataclass
class ExtractedDfa:
    dfa: Dfa
    num_clusters: int
    pre_minimization_states: int
    provenance: dict


def extract_dfa(
    model: RnnModel,
    dataset,
    cfg: ExtractionConfig,
    trial_index: int | None = None,
) -> ExtractedDfa:
    """Full extraction pipeline on the dataset's train split."""
    strings = [w for w, _ in dataset.train_samples()]
    if not strings:
        raise ExtractionError("traces", "dataset has an empty train split")
    try:
        traces = record_traces(model, strings)
    except Exception as e:
        raise ExtractionError("traces", str(e)) from e
    try:
        quant = quantize(traces, cfg)
    except Exception as e:
        raise ExtractionError("quantize", str(e)) from e
    try:
        diagram = build_diagram(traces, quant)
    except Exception as e:
        raise ExtractionError("diagram", str(e)) from e
    try:
        pruned = prune_to_dfa(diagram)
    except Exception as e:
        raise ExtractionError("prune", str(e)) from e
    try:
        small = minimize(pruned)
    except Exception as e:
        raise ExtractionError("minimize", str(e)) from e
    provenance = {
        "cell": model.kind,
        "hidden_size": model.hidden_size,
        "model_seed": model.seed,
        "grammar": dataset.grammar_id,
        "k": cfg.k,
        "k_effective": quant.k,
        "kmeans_seed": cfg.kmeans_seed,
        "restarts": cfg.restarts,
        "trial_index": trial_index,
    }
    return ExtractedDfa(
        dfa=small,
        num_clusters=quant.k,
        pre_minimization_states=pruned.num_states,
        provenance=provenance,
    )


def synthetic_state_traces(dfa: Dfa, strings) -> list[HiddenTrace]:
    """Traces whose hidden vectors are one-hot DFA states.

    Feeding these through the extraction pipeline with k = num_states must
    recover an automaton equivalent to the original; the tests and the
    acceptance suite rely on this round trip.
    """
    traces = []
    for w in strings:
        states = np.zeros((len(w) + 1, dfa.num_states))
        s = dfa.start
        states[0, s] = 1.0
        for i, ch in enumerate(w):
            s = dfa.step(s, ch)
            states[i + 1, s] = 1.0
        label = dfa.classify(w)
        scores = np.zeros(2)
        scores[label] = 1.0
        traces.append(
            HiddenTrace(string=w, states=states, scores=scores, prediction=label)
        )
    return traces

"""Scoring extracted automata against the networks they came from.

Three scores: plain accuracy on a labeled split, success rate (the fraction
of extraction trials whose DFA scores a perfect accuracy), and fidelity
(how often DFA and network agree on the same strings, which equals one
minus the normalized symmetric difference of their accepted sets).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._util import write_text_atomic
from .automata import NEGATIVE, POSITIVE, Dfa, LabeledDataset, tomita_dfa
from .extraction import ExtractionConfig, extract_dfa
from .rnn.model import RnnModel, classify_many, new_model
from .rnn.train import TrainConfig, train


def predict_labels(classifier, strings) -> np.ndarray:
    """Labels from a Dfa, an RnnModel, or any str -> {0,1} callable."""
    strings = list(strings)
    if isinstance(classifier, Dfa):
        return np.array([classifier.classify(w) for w in strings], dtype=np.int64)
    if isinstance(classifier, RnnModel):
        return classify_many(classifier, strings)
    return np.array([classifier(w) for w in strings], dtype=np.int64)


def accuracy(classifier, dataset: LabeledDataset, split: str = "test") -> float:
    pairs = dataset.split(split)
    if not pairs:
        raise ValueError(f"split {split!r} is empty")
    strings = [w for w, _ in pairs]
    labels = np.array([y for _, y in pairs])
    return float((predict_labels(classifier, strings) == labels).mean())


def fidelity(a, b, strings) -> float:
    """Agreement rate between two classifiers on the given strings.

    Equivalently one minus the size of the symmetric difference of their
    accepted subsets, normalized by the number of strings.
    """
    strings = list(strings)
    if not strings:
        raise ValueError("fidelity needs at least one string")
    return float(
        (predict_labels(a, strings) == predict_labels(b, strings)).mean()
    )


def inject_label_noise(
    dataset: LabeledDataset, n_pos: int, n_neg: int, seed: int
) -> LabeledDataset:
    """Flip the labels of n_pos positive and n_neg negative train samples.

    Class membership is decided by the grammar oracle when the dataset
    carries a Tomita grammar id (so flipping twice with the same seed is an
    exact involution); datasets without an oracle fall back to the stored
    labels.  Raises ValueError when a class has too few train samples.
    """
    if n_pos < 0 or n_neg < 0:
        raise ValueError("noise counts must be non-negative")
    if isinstance(dataset.grammar_id, int):
        oracle = tomita_dfa(dataset.grammar_id)
        label_of = {w: oracle.classify(w) for w, _ in dataset.samples}
    else:
        label_of = {w: y for w, y in dataset.samples}

    rng = np.random.default_rng(seed)
    flipped = dict()
    for label, count in ((POSITIVE, n_pos), (NEGATIVE, n_neg)):
        pool = sorted(
            i for i in dataset.train_indices
            if label_of[dataset.samples[i][0]] == label
        )
        if len(pool) < count:
            raise ValueError(
                f"cannot flip {count} samples with oracle label {label}; "
                f"train split only has {len(pool)}"
            )
        chosen = rng.choice(len(pool), size=count, replace=False)
        for c in chosen:
            flipped[pool[int(c)]] = True

    samples = tuple(
        (w, (1 - y) if i in flipped else y)
        for i, (w, y) in enumerate(dataset.samples)
    )
    return LabeledDataset(
        samples=samples,
        train_indices=dataset.train_indices,
        test_indices=dataset.test_indices,
        grammar_id=dataset.grammar_id,
    )


@dataclass(frozen=True)
class TrialResult:
    """One extraction attempt and its scores; error is set when the trial
    aborted and the scores before the failing stage are NaN."""

    grammar_id: int | str
    cell_kind: str
    hidden_size: int
    k: int
    model_seed: int
    kmeans_seed: int
    dfa_states: int
    dfa_accuracy: float
    rnn_test_accuracy: float
    fidelity: float
    success: bool
    error: str | None = None

    def __post_init__(self):
        if self.success and self.dfa_accuracy != 1.0:
            raise ValueError("a successful trial must have dfa_accuracy 1.0")


def success_rate(trials) -> float:
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    return sum(1 for t in trials if t.success) / len(trials)


def run_trial(
    model: RnnModel,
    dataset: LabeledDataset,
    k: int,
    kmeans_seed: int,
) -> TrialResult:
    """Extract with one K and score on the test split.

    Success means the extracted DFA classifies the whole test split
    correctly.  Extraction failures are captured, not raised.
    """
    test_strings = [w for w, _ in dataset.test_samples()]
    rnn_acc = accuracy(model, dataset, "test")
    base = dict(
        grammar_id=dataset.grammar_id,
        cell_kind=model.kind,
        hidden_size=model.hidden_size,
        k=k,
        model_seed=model.seed,
        kmeans_seed=kmeans_seed,
        rnn_test_accuracy=rnn_acc,
    )
    try:
        cfg = ExtractionConfig(k=k, kmeans_seed=kmeans_seed)
        extracted = extract_dfa(model, dataset, cfg)
        dfa_acc = accuracy(extracted.dfa, dataset, "test")
        fid = fidelity(extracted.dfa, model, test_strings)
        return TrialResult(
            dfa_states=extracted.dfa.num_states,
            dfa_accuracy=dfa_acc,
            fidelity=fid,
            success=dfa_acc == 1.0,
            **base,
        )
    except Exception as e:  # keep sweeping; one bad trial is a data point
        return TrialResult(
            dfa_states=0,
            dfa_accuracy=float("nan"),
            fidelity=float("nan"),
            success=False,
            error=f"{type(e).__name__}: {e}",
            **base,
        )


@dataclass(frozen=True)
class SweepSummary:
    grammar_id: int | str
    cell_kind: str
    n_trials: int
    mean_dfa_accuracy: float
    var_dfa_accuracy: float
    success_rate: float
    mean_fidelity: float


def summarize_sweep(trials) -> list[SweepSummary]:
    """Per (grammar, cell) aggregation; failed trials count against success
    and are excluded from the accuracy moments."""
    groups: dict[tuple, list[TrialResult]] = {}
    for t in trials:
        groups.setdefault((t.grammar_id, t.cell_kind), []).append(t)
    out = []
    for (gid, cell), ts in sorted(
        groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])
    ):
        accs = [t.dfa_accuracy for t in ts if not np.isnan(t.dfa_accuracy)]
        fids = [t.fidelity for t in ts if not np.isnan(t.fidelity)]
        out.append(
            SweepSummary(
                grammar_id=gid,
                cell_kind=cell,
                n_trials=len(ts),
                mean_dfa_accuracy=float(np.mean(accs)) if accs else float("nan"),
                var_dfa_accuracy=float(np.var(accs)) if accs else float("nan"),
                success_rate=success_rate(ts),
                mean_fidelity=float(np.mean(fids)) if fids else float("nan"),
            )
        )
    return out


def run_sweep(
    datasets: dict,
    cells,
    k_values,
    hidden_seeds,
    hidden_sizes: dict,
    train_cfg: TrainConfig | None = None,
    progress=None,
) -> tuple[list[TrialResult], list[SweepSummary]]:
    """Train one model per (grammar, cell, seed) and extract at every K.

    datasets maps grammar id -> LabeledDataset; hidden_sizes maps cell kind
    -> hidden size; hidden_seeds is either a seed iterable or a count.
    Returns every trial plus per-(grammar, cell) summaries.  Trials whose
    extraction fails are recorded with an error, never raised.
    """
    if train_cfg is None:
        train_cfg = TrainConfig()
    if isinstance(hidden_seeds, int):
        hidden_seeds = range(hidden_seeds)
    hidden_seeds = list(hidden_seeds)
    trials: list[TrialResult] = []
    for gid in sorted(datasets, key=str):
        dataset = datasets[gid]
        for cell in cells:
            for seed in hidden_seeds:
                model = new_model(cell, hidden_sizes[cell], seed)
                train(model, dataset, train_cfg)
                for k in k_values:
                    t = run_trial(model, dataset, k, kmeans_seed=seed)
                    trials.append(t)
                    if progress is not None:
                        progress(t)
    return trials, summarize_sweep(trials)


_TRIAL_COLUMNS = [
    "grammar", "cell", "hidden", "k", "model_seed", "kmeans_seed",
    "dfa_states", "dfa_accuracy", "rnn_test_accuracy", "fidelity",
    "success", "error",
]


def trials_to_csv(trials, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_TRIAL_COLUMNS)
    for t in trials:
        writer.writerow([
            t.grammar_id, t.cell_kind, t.hidden_size, t.k,
            t.model_seed, t.kmeans_seed, t.dfa_states,
            f"{t.dfa_accuracy:.6f}", f"{t.rnn_test_accuracy:.6f}",
            f"{t.fidelity:.6f}", int(t.success), t.error or "",
        ])
    write_text_atomic(path, buf.getvalue())


def summaries_to_csv(summaries, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "grammar", "cell", "n_trials", "mean_dfa_accuracy",
        "var_dfa_accuracy", "success_rate", "mean_fidelity",
    ])
    for s in summaries:
        writer.writerow([
            s.grammar_id, s.cell_kind, s.n_trials,
            f"{s.mean_dfa_accuracy:.6f}", f"{s.var_dfa_accuracy:.6f}",
            f"{s.success_rate:.6f}", f"{s.mean_fidelity:.6f}",
        ])
    write_text_atomic(path, buf.getvalue())

"""Adversarial robustness of a string classifier against a DFA oracle.

The test: sample strings the classifier gets right, enumerate every string
within a small edit distance, discard the neighbors whose true label
changes (the oracle says they crossed the class boundary), and ask whether
the classifier flips on any neighbor that stayed in the class.  A center
with at least one such flip is "broken"; the adversarial accuracy of a
trial is the fraction of centers that survive.

The same procedure runs for positive and negative centers; a (center,
perturbed) pair where the classifier flips is a witness that can be
re-checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import derive_rng
from .automata import Dfa, equivalent, sample_strings
from .evaluation import predict_labels


class SamplingExhausted(RuntimeError):
    """Could not find enough strings the classifier labels correctly."""


@dataclass(frozen=True)
class Neighborhood:
    """All strings within the given edit distance of the center, excluding
    the center itself, sorted by length then lexicographically."""

    center: str
    radius: int
    members: tuple[str, ...]


def _ball_one(x: str, alphabet) -> set[str]:
    out = {x}
    for i in range(len(x)):
        for sym in alphabet:
            if sym != x[i]:
                out.add(x[:i] + sym + x[i + 1 :])  # substitute
        out.add(x[:i] + x[i + 1 :])  # delete
    for i in range(len(x) + 1):
        for sym in alphabet:
            out.add(x[:i] + sym + x[i:])  # insert
    return out


def neighborhood(x: str, radius: int, alphabet=("0", "1")) -> Neighborhood:
    """Exact edit-distance ball of the given radius around x."""
    if radius < 1:
        raise ValueError("radius must be at least 1")
    ball = {x}
    for _ in range(radius):
        grown = set()
        for w in ball:
            grown |= _ball_one(w, alphabet)
        ball = grown
    ball.discard(x)
    members = tuple(sorted(ball, key=lambda w: (len(w), w)))
    return Neighborhood(center=x, radius=radius, members=members)


def sample_agreed_centers(
    classifier,
    oracle: Dfa,
    length: int,
    count: int,
    label: int,
    rng: np.random.Generator,
    max_attempts: int = 1_000_000,
) -> list[str]:
    """Uniform samples from the oracle's label class that the classifier
    also labels correctly.

    Draws from the class itself (path-weighted DFA sampling), so sparse
    languages cost nothing extra; rejection only filters classifier
    mistakes.  Raises SamplingExhausted when the agreement rate is too low
    to fill the quota within max_attempts draws.
    """
    out: list[str] = []
    attempts = 0
    batch = max(count, 64)
    while len(out) < count:
        if attempts >= max_attempts:
            raise SamplingExhausted(
                f"found {len(out)}/{count} agreed centers of length {length} "
                f"and label {label} after {attempts} draws"
            )
        draw = sample_strings(oracle, length, label, batch, rng)
        attempts += batch
        preds = predict_labels(classifier, draw)
        for w, p in zip(draw, preds):
            if p == label and len(out) < count:
                out.append(w)
    return out


@dataclass(frozen=True)
class AdversarialTrial:
    """One trial: gamma = 1 - broken/total for centers of one label."""

    label: int
    length: int
    radius: int
    total: int
    broken: int
    gamma: float
    witnesses: tuple[tuple[str, str], ...]


def adversarial_accuracy(
    classifier,
    oracle: Dfa,
    length: int,
    count: int,
    radius: int,
    label: int,
    rng: np.random.Generator,
) -> AdversarialTrial:
    """Run one trial for one label class.

    For each sampled center, neighbors whose oracle label differs from the
    center's are skipped; the center breaks when the classifier flips on
    any remaining neighbor.  The first flip in the neighborhood's canonical
    order becomes the witness.
    """
    centers = sample_agreed_centers(classifier, oracle, length, count, label, rng)
    broken = 0
    witnesses: list[tuple[str, str]] = []
    for center in centers:
        members = neighborhood(center, radius).members
        same = [w for w in members if oracle.classify(w) == label]
        if not same:
            continue  # every neighbor crosses the boundary; nothing to test
        preds = predict_labels(classifier, same)
        flips = np.nonzero(preds != label)[0]
        if len(flips) > 0:
            broken += 1
            witnesses.append((center, same[int(flips[0])]))
    gamma = 1.0 - broken / len(centers)
    return AdversarialTrial(
        label=label,
        length=length,
        radius=radius,
        total=len(centers),
        broken=broken,
        gamma=gamma,
        witnesses=tuple(witnesses),
    )


def verify_witness(classifier, oracle: Dfa, center: str, perturbed: str, label: int) -> bool:
    """Independently re-check one witness pair."""
    return (
        oracle.classify(center) == label
        and predict_labels(classifier, [center])[0] == label
        and oracle.classify(perturbed) == label
        and predict_labels(classifier, [perturbed])[0] != label
    )


@dataclass(frozen=True)
class VerificationReport:
    """Aggregate over trials: mean gamma per class plus every trial."""

    length: int
    count: int
    radius: int
    n_trials: int
    gamma_pos: float
    gamma_neg: float
    trials: tuple[AdversarialTrial, ...]


def verify_model(
    classifier,
    oracle: Dfa,
    length: int,
    count: int,
    n_trials: int,
    radius: int,
    seed: int,
) -> VerificationReport:
    """n_trials independent trials per class label, with derived seeds."""
    from .automata import NEGATIVE, POSITIVE

    all_trials: list[AdversarialTrial] = []
    for label in (POSITIVE, NEGATIVE):
        for trial_i in range(n_trials):
            rng = derive_rng(seed, "verify", length, label, trial_i)
            all_trials.append(
                adversarial_accuracy(
                    classifier, oracle, length, count, radius, label, rng
                )
            )
    pos = [t.gamma for t in all_trials if t.label == POSITIVE]
    neg = [t.gamma for t in all_trials if t.label == NEGATIVE]
    return VerificationReport(
        length=length,
        count=count,
        radius=radius,
        n_trials=n_trials,
        gamma_pos=float(np.mean(pos)),
        gamma_neg=float(np.mean(neg)),
        trials=tuple(all_trials),
    )


def local_invariance(classifier, oracle: Dfa, x: str, radius: int) -> str | None:
    """First neighbor (canonical order) where the classifier leaves the
    oracle's class while the oracle does not; None when the property holds.

    Precondition: classifier and oracle agree on x.
    """
    label = oracle.classify(x)
    if predict_labels(classifier, [x])[0] != label:
        raise ValueError("classifier and oracle must agree on the center")
    for w in neighborhood(x, radius).members:
        if oracle.classify(w) == label and predict_labels(classifier, [w])[0] != label:
            return w
    return None


@dataclass(frozen=True)
class EquivalenceResult:
    agreement: float
    witnesses: tuple[str, ...]
    exact: bool | None  # set when both sides are DFAs


def equivalence_check(
    classifier,
    oracle: Dfa,
    lengths,
    per_length: int,
    seed: int,
    max_witnesses: int = 10,
) -> EquivalenceResult:
    """Language agreement across lengths: exhaustive where 2^N fits the
    per-length budget, uniform sampling beyond.  When the classifier is
    itself a DFA the exact product check is run as well."""
    rng = derive_rng(seed, "equivalence")
    agree = 0
    total = 0
    witnesses: list[str] = []
    for n in sorted(lengths):
        if 2**n <= per_length:
            strings = [format(v, f"0{n}b") if n else "" for v in range(2**n)]
        else:
            bits = rng.integers(0, 2, size=(per_length, n))
            strings = ["".join("1" if b else "0" for b in row) for row in bits]
        preds = predict_labels(classifier, strings)
        for w, p in zip(strings, preds):
            want = oracle.classify(w)
            total += 1
            if p == want:
                agree += 1
            elif len(witnesses) < max_witnesses:
                witnesses.append(w)
    exact = None
    if isinstance(classifier, Dfa):
        same, cex = equivalent(classifier, oracle)
        exact = same
        if cex is not None and cex not in witnesses:
            witnesses.insert(0, cex)
    return EquivalenceResult(
        agreement=agree / total if total else float("nan"),
        witnesses=tuple(witnesses[:max_witnesses]),
        exact=exact,
    )


def length_sweep(
    classifier,
    oracle: Dfa,
    lengths,
    count: int,
    radius: int,
    seed: int,
) -> list[dict]:
    """One adversarial trial per (length, label); failures become rows with
    an error note instead of aborting the sweep."""
    from .automata import NEGATIVE, POSITIVE

    rows = []
    for n in lengths:
        for label in (POSITIVE, NEGATIVE):
            rng = derive_rng(seed, "length_sweep", n, label)
            try:
                trial = adversarial_accuracy(
                    classifier, oracle, n, count, radius, label, rng
                )
                rows.append(
                    {
                        "length": n,
                        "label": label,
                        "gamma": trial.gamma,
                        "broken": trial.broken,
                        "total": trial.total,
                        "error": "",
                    }
                )
            except (SamplingExhausted, ValueError) as e:
                rows.append(
                    {
                        "length": n,
                        "label": label,
                        "gamma": float("nan"),
                        "broken": -1,
                        "total": 0,
                        "error": str(e),
                    }
                )
    return rows

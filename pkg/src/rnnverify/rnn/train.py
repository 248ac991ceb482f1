"""Full-backprop-through-time training on labeled string datasets.

Plain minibatch gradient descent with momentum and a global-norm gradient
clip.  Batches are built within same-length groups so each batch runs as
one vectorized unrolled pass.  Training stops early once test accuracy
reaches the configured target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..automata import LabeledDataset
from .model import RnnModel, classify_many, forward_same_length


class TrainingDiverged(RuntimeError):
    """Loss or a parameter went non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    max_epochs: int = 500
    batch_size: int = 32
    seed: int = 0
    target_test_accuracy: float = 1.0
    grad_clip: float = 5.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive")


@dataclass
class TrainingLog:
    losses: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    test_accuracy: list[float] = field(default_factory=list)
    epochs_run: int = 0
    reached_target: bool = False
    param_count: int = 0


def loss_and_grads(model: RnnModel, strings, labels):
    """Mean cross-entropy over a mixed-length batch, plus parameter grads.

    Gradients cover every trainable tensor (cell weights and readout); the
    initial state is excluded by contract.
    """
    strings = list(strings)
    labels = np.asarray(labels, dtype=np.int64)
    if len(strings) != len(labels):
        raise ValueError("strings and labels length mismatch")
    if len(strings) == 0:
        raise ValueError("empty batch")
    total = len(strings)
    cell = model.cell
    grads = {
        name: np.zeros_like(model.params[name]) for name in model.trainable_names()
    }
    loss = 0.0

    groups: dict[int, list[int]] = {}
    for i, w in enumerate(strings):
        groups.setdefault(len(w), []).append(i)

    for _, idx in sorted(groups.items()):
        batch = [strings[i] for i in idx]
        y = labels[idx]
        final_h, probs, caches = forward_same_length(model, batch, keep="caches")
        b = len(batch)
        eps = np.finfo(np.float64).tiny
        loss += -np.log(probs[np.arange(b), y] + eps).sum()

        dlogits = probs.copy()
        dlogits[np.arange(b), y] -= 1.0
        dlogits /= total
        grads["Wout"] += dlogits.T @ final_h
        grads["bout"] += dlogits.sum(axis=0)
        dh = dlogits @ model.params["Wout"]
        if cell.state_arity == 2:
            dstate = (dh, np.zeros_like(dh))
        else:
            dstate = (dh,)
        for cache in reversed(caches):
            dstate = cell.backward(model.params, grads, cache, dstate)
    return loss / total, grads


def _clip_by_global_norm(grads: dict[str, np.ndarray], clip: float) -> float:
    sq = 0.0
    for g in grads.values():
        sq += float((g * g).sum())
    norm = np.sqrt(sq)
    if norm > clip:
        scale = clip / norm
        for g in grads.values():
            g *= scale
    return norm


def _accuracy(model: RnnModel, pairs) -> float:
    if not pairs:
        return float("nan")
    strings = [w for w, _ in pairs]
    labels = np.array([y for _, y in pairs])
    return float((classify_many(model, strings) == labels).mean())


def train(
    model: RnnModel, dataset: LabeledDataset, cfg: TrainConfig | None = None
) -> tuple[RnnModel, TrainingLog]:
    """Train in place on the dataset's train split; returns (model, log).

    Raises TrainingDiverged on non-finite loss and ValueError on an empty
    train split.  With an empty test split the early-stop check is skipped
    and training always runs the full epoch budget.
    """
    from .model import count_parameters

    if cfg is None:
        cfg = TrainConfig()
    train_pairs = dataset.train_samples()
    test_pairs = dataset.test_samples()
    if not train_pairs:
        raise ValueError("dataset has an empty train split")

    rng = np.random.default_rng(cfg.seed)
    velocity = {
        name: np.zeros_like(model.params[name]) for name in model.trainable_names()
    }
    log = TrainingLog(param_count=count_parameters(model))

    for _ in range(cfg.max_epochs):
        order = rng.permutation(len(train_pairs))
        by_len: dict[int, list[int]] = {}
        for i in order:
            by_len.setdefault(len(train_pairs[i][0]), []).append(int(i))

        epoch_loss = 0.0
        n_batches = 0
        for length in sorted(by_len):
            idx = by_len[length]
            for j in range(0, len(idx), cfg.batch_size):
                chunk = idx[j : j + cfg.batch_size]
                strings = [train_pairs[i][0] for i in chunk]
                ys = [train_pairs[i][1] for i in chunk]
                loss, grads = loss_and_grads(model, strings, ys)
                if not np.isfinite(loss):
                    raise TrainingDiverged(f"non-finite loss at epoch {log.epochs_run}")
                _clip_by_global_norm(grads, cfg.grad_clip)
                for name, g in grads.items():
                    v = velocity[name]
                    v *= cfg.momentum
                    v -= cfg.learning_rate * g
                    model.params[name] += v
                epoch_loss += loss
                n_batches += 1

        log.losses.append(epoch_loss / max(1, n_batches))
        log.train_accuracy.append(_accuracy(model, train_pairs))
        log.test_accuracy.append(_accuracy(model, test_pairs))
        log.epochs_run += 1
        if test_pairs and log.test_accuracy[-1] >= cfg.target_test_accuracy:
            log.reached_target = True
            break
    return model, log


def check_gradients(model: RnnModel, strings, labels, eps: float = 1e-5) -> float:
    """Max relative error between backprop and central differences.

    Perturbs every trainable coordinate, so keep the model tiny.
    """
    _, grads = loss_and_grads(model, strings, labels)
    worst = 0.0
    for name in model.trainable_names():
        param = model.params[name]
        flat = param.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            lp, _ = loss_and_grads(model, strings, labels)
            flat[i] = orig - eps
            lm, _ = loss_and_grads(model, strings, labels)
            flat[i] = orig
            numeric = (lp - lm) / (2 * eps)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            rel = abs(numeric - gflat[i]) / denom
            if rel > worst:
                worst = rel
    return worst

"""Recurrent binary-string classifiers.

A model is a cell (see cells.py), an untrained initial state, and an affine
readout from the final hidden state to two class scores.  The initial state
and readout are part of the checkpoint but only cell and readout weights
count as trained parameters; the initial state is frozen at its random
draw.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .._util import write_text_atomic
from ..automata import NEGATIVE, POSITIVE
from .cells import CELL_KINDS, INPUT_SIZE, get_cell


@dataclass
class RnnModel:
    kind: str
    hidden_size: int
    seed: int
    params: dict[str, np.ndarray]

    @property
    def cell(self):
        return get_cell(self.kind)

    def trainable_names(self) -> list[str]:
        skip = {"h0", "c0"}
        return [k for k in self.params if k not in skip]


@dataclass(frozen=True)
class HiddenTrace:
    """One string's pass through the network.

    states has T+1 rows: the initial hidden state, then one row per symbol
    consumed.  scores are the two softmax outputs for the final state.
    """

    string: str
    states: np.ndarray
    scores: np.ndarray
    prediction: int


def _param_order(kind: str, hidden_size: int) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, fan_in) for every tensor, in the fixed creation order."""
    cell = get_cell(kind)
    entries = [
        (name, shape, cell.fan_in(name, hidden_size))
        for name, shape in cell.param_shapes(hidden_size).items()
    ]
    entries.append(("Wout", (INPUT_SIZE, hidden_size), hidden_size))
    entries.append(("bout", (INPUT_SIZE,), hidden_size))
    entries.append(("h0", (hidden_size,), 0))
    if cell.state_arity == 2:
        entries.append(("c0", (hidden_size,), 0))
    return entries


def new_model(kind: str, hidden_size: int, seed: int) -> RnnModel:
    """Fresh model with uniform [-0.5, 0.5]/sqrt(fan_in) weights.

    The initial state tensors (fan_in 0 above) are drawn from [0, 1)
    instead, giving the quantizer a non-degenerate starting point.
    """
    if hidden_size < 1:
        raise ValueError("hidden_size must be positive")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, fan in _param_order(kind, hidden_size):
        if fan == 0:
            params[name] = rng.uniform(0.0, 1.0, size=shape)
        else:
            params[name] = rng.uniform(-0.5, 0.5, size=shape) / np.sqrt(fan)
    return RnnModel(kind=kind, hidden_size=hidden_size, seed=seed, params=params)


def count_parameters(model_or_kind, hidden_size: int | None = None) -> int:
    """Trained parameter count: cell tensors plus readout, no initial state."""
    if isinstance(model_or_kind, RnnModel):
        kind, h = model_or_kind.kind, model_or_kind.hidden_size
    else:
        if hidden_size is None:
            raise ValueError("hidden_size required when passing a cell kind")
        kind, h = model_or_kind, hidden_size
    total = 0
    for name, shape, fan in _param_order(kind, h):
        if name in ("h0", "c0"):
            continue
        size = 1
        for d in shape:
            size *= d
        total += size
    return total


def balance_hidden_sizes(
    target_params: int, kinds=CELL_KINDS, max_hidden: int = 128
) -> dict[str, int]:
    """Per-cell hidden sizes whose parameter counts are closest to the target.

    Ties go to the smaller size.
    """
    out = {}
    for kind in kinds:
        best_h, best_gap = None, None
        for h in range(2, max_hidden + 1):
            gap = abs(count_parameters(kind, h) - target_params)
            if best_gap is None or gap < best_gap:
                best_h, best_gap = h, gap
        out[kind] = best_h
    return out


def _encode_symbols(strings: list[str]) -> np.ndarray:
    """(B, T) int array for same-length strings over the binary alphabet."""
    if not strings:
        return np.zeros((0, 0), dtype=np.int64)
    t = len(strings[0])
    arr = np.zeros((len(strings), t), dtype=np.int64)
    for i, w in enumerate(strings):
        for j, ch in enumerate(w):
            if ch == "1":
                arr[i, j] = 1
            elif ch != "0":
                raise ValueError(f"symbol {ch!r} not in the binary alphabet")
    return arr


def _initial_state(model: RnnModel, batch: int):
    h = np.tile(model.params["h0"], (batch, 1))
    if model.cell.state_arity == 2:
        return (h, np.tile(model.params["c0"], (batch, 1)))
    return (h,)


def _softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=1, keepdims=True)


def forward_same_length(
    model: RnnModel, strings: list[str], keep: str = "final"
):
    """Run a batch of same-length strings.

    keep="final": returns (final_h, probs).
    keep="states": returns (all_states, probs) with all_states (B, T+1, H).
    keep="caches": returns (final_h, probs, caches) for backprop.
    """
    syms = _encode_symbols(strings)
    b, t = syms.shape
    cell = model.cell
    state = _initial_state(model, b)
    caches = []
    states = None
    if keep == "states":
        states = np.empty((b, t + 1, model.hidden_size))
        states[:, 0] = state[0]
    for step_i in range(t):
        state, cache = cell.step(model.params, state, syms[:, step_i])
        if keep == "caches":
            caches.append(cache)
        if keep == "states":
            states[:, step_i + 1] = state[0]
    final_h = state[0]
    logits = final_h @ model.params["Wout"].T + model.params["bout"]
    probs = _softmax(logits)
    if keep == "caches":
        return final_h, probs, caches
    if keep == "states":
        return states, probs
    return final_h, probs


def _group_by_length(strings) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for i, w in enumerate(strings):
        groups.setdefault(len(w), []).append(i)
    return groups


def scores(model: RnnModel, string: str) -> np.ndarray:
    """Softmax class scores for one string; index 1 is the positive class."""
    _, probs = forward_same_length(model, [string])
    return probs[0]


def classify(model: RnnModel, string: str) -> int:
    return classify_many(model, [string])[0]


def classify_many(model: RnnModel, strings) -> np.ndarray:
    """Labels for a mixed-length batch; ties go to the negative class."""
    strings = list(strings)
    out = np.zeros(len(strings), dtype=np.int64)
    for _, idx in sorted(_group_by_length(strings).items()):
        batch = [strings[i] for i in idx]
        _, probs = forward_same_length(model, batch)
        pred = (probs[:, POSITIVE] > probs[:, NEGATIVE]).astype(np.int64)
        out[idx] = pred
    return out


def record_traces(model: RnnModel, strings) -> list[HiddenTrace]:
    """Hidden-state trajectories for every string, initial state included."""
    strings = list(strings)
    traces: list[HiddenTrace | None] = [None] * len(strings)
    for _, idx in sorted(_group_by_length(strings).items()):
        batch = [strings[i] for i in idx]
        states, probs = forward_same_length(model, batch, keep="states")
        for row, i in enumerate(idx):
            p = probs[row]
            pred = POSITIVE if p[POSITIVE] > p[NEGATIVE] else NEGATIVE
            traces[i] = HiddenTrace(
                string=strings[i],
                states=states[row].copy(),
                scores=p.copy(),
                prediction=pred,
            )
    return traces


# ---------------------------------------------------------------------------
# checkpoints: JSON with base64-packed float64 buffers, bit-exact round trip


def model_to_json(model: RnnModel) -> str:
    payload = {
        "kind": model.kind,
        "hidden_size": model.hidden_size,
        "seed": model.seed,
        "params": {
            name: {
                "shape": list(arr.shape),
                "data": base64.b64encode(
                    np.ascontiguousarray(arr, dtype=np.float64).tobytes()
                ).decode("ascii"),
            }
            for name, arr in sorted(model.params.items())
        },
    }
    return json.dumps(payload, indent=1, sort_keys=True)


def model_from_json(text: str) -> RnnModel:
    payload = json.loads(text)
    kind = payload["kind"]
    if kind not in CELL_KINDS:
        raise ValueError(f"checkpoint has unknown cell kind {kind!r}")
    params = {}
    for name, entry in payload["params"].items():
        buf = base64.b64decode(entry["data"])
        arr = np.frombuffer(buf, dtype=np.float64).reshape(entry["shape"]).copy()
        params[name] = arr
    model = RnnModel(
        kind=kind,
        hidden_size=int(payload["hidden_size"]),
        seed=int(payload["seed"]),
        params=params,
    )
    expected = {name for name, _, _ in _param_order(kind, model.hidden_size)}
    if set(params) != expected:
        raise ValueError(
            f"checkpoint parameter names {sorted(params)} do not match "
            f"cell kind {kind!r}"
        )
    for name, shape, _ in _param_order(kind, model.hidden_size):
        if tuple(params[name].shape) != shape:
            raise ValueError(f"checkpoint tensor {name} has shape "
                             f"{params[name].shape}, expected {shape}")
    return model


def save_model(model: RnnModel, path) -> None:
    write_text_atomic(path, model_to_json(model))


def load_model(path) -> RnnModel:
    with open(path) as fh:
        return model_from_json(fh.read())

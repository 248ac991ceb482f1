"""The five recurrent cells, as plain numpy forward/backward pairs.

Every cell consumes a batch of symbol indices (0 or 1, one per step) and a
state tuple of arrays shaped (batch, hidden).  Elman-family cells carry
(h,); the LSTM carries (h, c).  backward() consumes the cache saved by
step() and accumulates parameter gradients in place, returning the gradient
with respect to the previous state.

Input strings are one-hot over a two-symbol alphabet, so every x-projection
W (hidden, 2) reduces to selecting the column of the current symbol; the
batched form W.T[syms] gathers rows of W.T.

Weight layout note: a recurrent map written as "U h" acts on row-major
batches as h @ U.T.
"""

from __future__ import annotations

import numpy as np

INPUT_SIZE = 2


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _split_by_symbol(syms: np.ndarray):
    for sym in (0, 1):
        mask = syms == sym
        if mask.any():
            yield sym, mask


class ElmanCell:
    """h' = tanh(W x + U h + b)"""

    name = "elman"
    state_arity = 1

    def param_shapes(self, h: int) -> dict[str, tuple[int, ...]]:
        return {"W": (h, INPUT_SIZE), "U": (h, h), "b": (h,)}

    def fan_in(self, name: str, h: int) -> int:
        return {"W": INPUT_SIZE, "U": h, "b": h + INPUT_SIZE}[name]

    def step(self, params, state, syms):
        (h,) = state
        pre = params["W"].T[syms] + h @ params["U"].T + params["b"]
        hn = np.tanh(pre)
        return (hn,), (h, hn, syms)

    def backward(self, params, grads, cache, dstate):
        h, hn, syms = cache
        (dhn,) = dstate
        dpre = dhn * (1.0 - hn * hn)
        grads["b"] += dpre.sum(axis=0)
        for sym, mask in _split_by_symbol(syms):
            grads["W"][:, sym] += dpre[mask].sum(axis=0)
        grads["U"] += dpre.T @ h
        return (dpre @ params["U"],)


class SecondOrderCell:
    """h'[j] = sigmoid(sum_i T[j, i, x] h[i] + b[j])

    The recurrent tensor T has one hidden-to-hidden matrix per input
    symbol; the current symbol selects which matrix drives the update.
    """

    name = "second_order"
    state_arity = 1

    def param_shapes(self, h: int) -> dict[str, tuple[int, ...]]:
        return {"T": (h, h, INPUT_SIZE), "b": (h,)}

    def fan_in(self, name: str, h: int) -> int:
        return {"T": h * INPUT_SIZE, "b": h * INPUT_SIZE}[name]

    def step(self, params, state, syms):
        (h,) = state
        pre = np.empty_like(h)
        for sym, mask in _split_by_symbol(syms):
            pre[mask] = h[mask] @ params["T"][:, :, sym].T
        pre += params["b"]
        hn = _sigmoid(pre)
        return (hn,), (h, hn, syms)

    def backward(self, params, grads, cache, dstate):
        h, hn, syms = cache
        (dhn,) = dstate
        dpre = dhn * hn * (1.0 - hn)
        grads["b"] += dpre.sum(axis=0)
        dh = np.empty_like(h)
        for sym, mask in _split_by_symbol(syms):
            grads["T"][:, :, sym] += dpre[mask].T @ h[mask]
            dh[mask] = dpre[mask] @ params["T"][:, :, sym]
        return (dh,)


class MultiplicativeIntegrationCell:
    """h' = tanh(alpha*(W x)*(U h) + beta1*(U h) + beta2*(W x) + b)

    Rank-1 gating of the input and recurrent streams; all gate vectors act
    elementwise.
    """

    name = "mi_rnn"
    state_arity = 1

    def param_shapes(self, h: int) -> dict[str, tuple[int, ...]]:
        return {
            "W": (h, INPUT_SIZE),
            "U": (h, h),
            "alpha": (h,),
            "beta1": (h,),
            "beta2": (h,),
            "b": (h,),
        }

    def fan_in(self, name: str, h: int) -> int:
        return {
            "W": INPUT_SIZE,
            "U": h,
            "alpha": 1,
            "beta1": 1,
            "beta2": 1,
            "b": h + INPUT_SIZE,
        }[name]

    def step(self, params, state, syms):
        (h,) = state
        a = params["W"].T[syms]
        u = h @ params["U"].T
        pre = params["alpha"] * a * u + params["beta1"] * u + params["beta2"] * a + params["b"]
        hn = np.tanh(pre)
        return (hn,), (h, hn, syms, a, u)

    def backward(self, params, grads, cache, dstate):
        h, hn, syms, a, u = cache
        (dhn,) = dstate
        dpre = dhn * (1.0 - hn * hn)
        grads["alpha"] += (dpre * a * u).sum(axis=0)
        grads["beta1"] += (dpre * u).sum(axis=0)
        grads["beta2"] += (dpre * a).sum(axis=0)
        grads["b"] += dpre.sum(axis=0)
        da = dpre * (params["alpha"] * u + params["beta2"])
        du = dpre * (params["alpha"] * a + params["beta1"])
        for sym, mask in _split_by_symbol(syms):
            grads["W"][:, sym] += da[mask].sum(axis=0)
        grads["U"] += du.T @ h
        return (du @ params["U"],)


class GruCell:
    """Standard gated recurrent unit.

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    n = tanh(W_n x + r * (U_n h) + b_n)
    h' = (1 - z) * n + z * h
    """

    name = "gru"
    state_arity = 1

    _gates = ("z", "r", "n")

    def param_shapes(self, h: int) -> dict[str, tuple[int, ...]]:
        shapes = {}
        for g in self._gates:
            shapes[f"W_{g}"] = (h, INPUT_SIZE)
            shapes[f"U_{g}"] = (h, h)
            shapes[f"b_{g}"] = (h,)
        return shapes

    def fan_in(self, name: str, h: int) -> int:
        if name.startswith("W_"):
            return INPUT_SIZE
        if name.startswith("U_"):
            return h
        return h + INPUT_SIZE

    def step(self, params, state, syms):
        (h,) = state
        z = _sigmoid(params["W_z"].T[syms] + h @ params["U_z"].T + params["b_z"])
        r = _sigmoid(params["W_r"].T[syms] + h @ params["U_r"].T + params["b_r"])
        un = h @ params["U_n"].T
        n = np.tanh(params["W_n"].T[syms] + r * un + params["b_n"])
        hn = (1.0 - z) * n + z * h
        return (hn,), (h, syms, z, r, un, n)

    def backward(self, params, grads, cache, dstate):
        h, syms, z, r, un, n = cache
        (dhn,) = dstate
        dz = dhn * (h - n) * z * (1.0 - z)
        dn_pre = dhn * (1.0 - z) * (1.0 - n * n)
        dr = dn_pre * un * r * (1.0 - r)
        dun = dn_pre * r

        dh = dhn * z
        for gate, dg in (("z", dz), ("r", dr), ("n", dn_pre)):
            grads[f"b_{gate}"] += dg.sum(axis=0)
            for sym, mask in _split_by_symbol(syms):
                grads[f"W_{gate}"][:, sym] += dg[mask].sum(axis=0)
        grads["U_z"] += dz.T @ h
        grads["U_r"] += dr.T @ h
        grads["U_n"] += dun.T @ h
        dh += dz @ params["U_z"] + dr @ params["U_r"] + dun @ params["U_n"]
        return (dh,)


class LstmCell:
    """Standard LSTM with forget, input and output gates.

    i, f, o = sigmoid(W x + U h + b), g = tanh(W_g x + U_g h + b_g)
    c' = f * c + i * g
    h' = o * tanh(c')
    """

    name = "lstm"
    state_arity = 2

    _gates = ("i", "f", "g", "o")

    def param_shapes(self, h: int) -> dict[str, tuple[int, ...]]:
        shapes = {}
        for g in self._gates:
            shapes[f"W_{g}"] = (h, INPUT_SIZE)
            shapes[f"U_{g}"] = (h, h)
            shapes[f"b_{g}"] = (h,)
        return shapes

    def fan_in(self, name: str, h: int) -> int:
        if name.startswith("W_"):
            return INPUT_SIZE
        if name.startswith("U_"):
            return h
        return h + INPUT_SIZE

    def step(self, params, state, syms):
        h, c = state
        i = _sigmoid(params["W_i"].T[syms] + h @ params["U_i"].T + params["b_i"])
        f = _sigmoid(params["W_f"].T[syms] + h @ params["U_f"].T + params["b_f"])
        g = np.tanh(params["W_g"].T[syms] + h @ params["U_g"].T + params["b_g"])
        o = _sigmoid(params["W_o"].T[syms] + h @ params["U_o"].T + params["b_o"])
        cn = f * c + i * g
        tc = np.tanh(cn)
        hn = o * tc
        return (hn, cn), (h, c, syms, i, f, g, o, tc)

    def backward(self, params, grads, cache, dstate):
        h, c, syms, i, f, g, o, tc = cache
        dhn, dcn = dstate
        do = dhn * tc * o * (1.0 - o)
        dc_total = dcn + dhn * o * (1.0 - tc * tc)
        df = dc_total * c * f * (1.0 - f)
        di = dc_total * g * i * (1.0 - i)
        dg = dc_total * i * (1.0 - g * g)
        dc_prev = dc_total * f

        dh = np.zeros_like(h)
        for gate, dgate in (("i", di), ("f", df), ("g", dg), ("o", do)):
            grads[f"b_{gate}"] += dgate.sum(axis=0)
            for sym, mask in _split_by_symbol(syms):
                grads[f"W_{gate}"][:, sym] += dgate[mask].sum(axis=0)
            grads[f"U_{gate}"] += dgate.T @ h
            dh += dgate @ params[f"U_{gate}"]
        return (dh, dc_prev)


CELLS = {
    cell.name: cell
    for cell in (
        ElmanCell(),
        SecondOrderCell(),
        MultiplicativeIntegrationCell(),
        GruCell(),
        LstmCell(),
    )
}

CELL_KINDS = tuple(sorted(CELLS))


def get_cell(kind: str):
    try:
        return CELLS[kind]
    except KeyError:
        raise ValueError(
            f"unknown cell kind {kind!r}; expected one of {CELL_KINDS}"
        ) from None

"""Forward and backward kernels of the fixed layer set.

Every forward function returns its output together with whatever the matching
backward function needs. Batches are the leading axis everywhere; recurrent
inputs are (batch, steps, features).
"""

from dataclasses import dataclass

import numpy as np

from labelrepair.core.exceptions import (
    ArgumentError,
    EncodingError,
    ShapeError,
    StatisticsError,
)
from labelrepair.neural.models import (
    GATES,
    BatchNormParams,
    DenseParams,
    EmbeddingParams,
    LstmLayerParams,
)

PROBABILITY_FLOOR = 1e-12


def sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


# embedding


def embedding_forward(p: EmbeddingParams, ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= p.vocab_size):
        raise EncodingError(
            f"id out of range for an embedding of {p.vocab_size} rows"
        )
    return p.table[ids]


def embedding_backward(
    p: EmbeddingParams, ids: np.ndarray, dout: np.ndarray
) -> np.ndarray:
    dtable = np.zeros_like(p.table)
    np.add.at(dtable, np.asarray(ids), dout)
    return dtable


# lstm


@dataclass
class LstmCellCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def _check_cell_shapes(p: LstmLayerParams, x_t, h_prev, c_prev) -> None:
    if x_t.ndim != 2 or x_t.shape[1] != p.input_size:
        raise ShapeError(
            f"LSTM input must be (batch, {p.input_size}), got {x_t.shape}"
        )
    expected = (x_t.shape[0], p.hidden_size)
    if h_prev.shape != expected or c_prev.shape != expected:
        raise ShapeError(
            f"LSTM state must be {expected}, got {h_prev.shape} and {c_prev.shape}"
        )


def lstm_cell_forward(
    p: LstmLayerParams, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray, LstmCellCache]:
    """One time step.

    f = sigmoid(U_f h + W_f x + b_f), likewise i and o; g = tanh(U_g h + W_g x
    + b_g); c = f * c_prev + i * g; h = o * tanh(c).
    """
    _check_cell_shapes(p, x_t, h_prev, c_prev)
    pre = {
        gate: h_prev @ p.U[gate].T + x_t @ p.W[gate].T + p.b[gate] for gate in GATES
    }
    f = sigmoid(pre["f"])
    i = sigmoid(pre["i"])
    g = np.tanh(pre["g"])
    o = sigmoid(pre["o"])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, LstmCellCache(x_t, h_prev, c_prev, f, i, g, o, tanh_c)


def lstm_cell_backward(
    dh: np.ndarray, dc_next: np.ndarray, cache: LstmCellCache, p: LstmLayerParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """Returns (dx, dh_prev, dc_prev, parameter gradients)."""
    do = dh * cache.tanh_c
    dc = dc_next + dh * cache.o * (1.0 - cache.tanh_c**2)
    dc_prev = dc * cache.f
    dpre = {
        "f": dc * cache.c_prev * cache.f * (1.0 - cache.f),
        "i": dc * cache.g * cache.i * (1.0 - cache.i),
        "g": dc * cache.i * (1.0 - cache.g**2),
        "o": do * cache.o * (1.0 - cache.o),
    }
    dx = np.zeros_like(cache.x)
    dh_prev = np.zeros_like(cache.h_prev)
    grads: dict[str, np.ndarray] = {}
    for gate in GATES:
        delta = dpre[gate]
        grads[f"W_{gate}"] = delta.T @ cache.x
        grads[f"U_{gate}"] = delta.T @ cache.h_prev
        grads[f"b_{gate}"] = delta.sum(axis=0)
        dx += delta @ p.W[gate]
        dh_prev += delta @ p.U[gate]
    return dx, dh_prev, dc_prev, grads


@dataclass
class LstmStackCache:
    params: list[LstmLayerParams]
    steps: list[list[LstmCellCache]]  # [layer][time]


def lstm_stack_forward(
    layers: list[LstmLayerParams], inputs: np.ndarray
) -> tuple[np.ndarray, LstmStackCache]:
    """Unroll every layer over all steps from a zero state.

    Returns the top layer's hidden state after the last step.
    """
    if not layers:
        raise ShapeError("an LSTM stack needs at least one layer")
    if inputs.ndim != 3 or inputs.shape[1] < 1:
        raise ShapeError(
            f"LSTM stack input must be (batch, steps, features), got {inputs.shape}"
        )
    batch, steps, _ = inputs.shape
    sequence = inputs
    h = None
    cache = LstmStackCache(params=list(layers), steps=[])
    for p in layers:
        h = np.zeros((batch, p.hidden_size), dtype=inputs.dtype)
        c = np.zeros_like(h)
        outputs = np.empty((batch, steps, p.hidden_size), dtype=inputs.dtype)
        step_caches = []
        for t in range(steps):
            h, c, step_cache = lstm_cell_forward(p, sequence[:, t, :], h, c)
            outputs[:, t, :] = h
            step_caches.append(step_cache)
        cache.steps.append(step_caches)
        sequence = outputs
    return h, cache


def lstm_stack_backward(
    dh_top: np.ndarray, cache: LstmStackCache
) -> tuple[np.ndarray, list[dict[str, np.ndarray]]]:
    """Backpropagation through time; returns (d inputs, per-layer gradients)."""
    layer_grads: list[dict[str, np.ndarray]] = [{} for _ in cache.params]
    top = cache.params[-1]
    steps = len(cache.steps[-1])
    d_sequence = np.zeros(
        (dh_top.shape[0], steps, top.hidden_size), dtype=dh_top.dtype
    )
    d_sequence[:, -1, :] = dh_top
    for index in reversed(range(len(cache.params))):
        p = cache.params[index]
        grads = {name: np.zeros_like(array) for name, array in p.arrays().items()}
        d_inputs = np.empty(
            (dh_top.shape[0], steps, p.input_size), dtype=dh_top.dtype
        )
        dh_next = np.zeros((dh_top.shape[0], p.hidden_size), dtype=dh_top.dtype)
        dc_next = np.zeros_like(dh_next)
        for t in reversed(range(steps)):
            dx, dh_next, dc_next, step_grads = lstm_cell_backward(
                d_sequence[:, t, :] + dh_next, dc_next, cache.steps[index][t], p
            )
            for name, grad in step_grads.items():
                grads[name] += grad
            d_inputs[:, t, :] = dx
        layer_grads[index] = grads
        d_sequence = d_inputs
    return d_sequence, layer_grads


# dropout


def dropout_forward(
    x: np.ndarray,
    rate: float,
    training: bool,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout. Returns the output and the scaled keep mask."""
    if not 0.0 <= rate < 1.0:
        raise ArgumentError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ArgumentError("training-mode dropout needs a random generator")
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * mask, mask


def dropout_backward(dout: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    return dout if mask is None else dout * mask


# batch normalization


@dataclass
class BatchNormCache:
    xhat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray
    training: bool


def batchnorm_forward(
    p: BatchNormParams, x: np.ndarray, training: bool
) -> tuple[np.ndarray, BatchNormCache]:
    if x.ndim != 2 or x.shape[1] != p.gamma.shape[0]:
        raise ShapeError(
            f"batch norm input must be (batch, {p.gamma.shape[0]}), got {x.shape}"
        )
    if training:
        if x.shape[0] < 2:
            raise StatisticsError("batch statistics need at least two samples")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        p.running_mean[...] = p.momentum * p.running_mean + (1 - p.momentum) * mean
        p.running_var[...] = p.momentum * p.running_var + (1 - p.momentum) * var
    else:
        mean, var = p.running_mean, p.running_var
    inv_std = 1.0 / np.sqrt(var + p.epsilon)
    xhat = (x - mean) * inv_std
    return p.gamma * xhat + p.beta, BatchNormCache(xhat, inv_std, p.gamma, training)


def batchnorm_backward(
    dout: np.ndarray, cache: BatchNormCache
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    grads = {
        "gamma": (dout * cache.xhat).sum(axis=0),
        "beta": dout.sum(axis=0),
    }
    dxhat = dout * cache.gamma
    if not cache.training:
        return dxhat * cache.inv_std, grads
    n = dout.shape[0]
    dx = (cache.inv_std / n) * (
        n * dxhat
        - dxhat.sum(axis=0)
        - cache.xhat * (dxhat * cache.xhat).sum(axis=0)
    )
    return dx, grads


# dense + softmax + cross-entropy


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def dense_softmax(p: DenseParams, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != p.weight.shape[1]:
        raise ShapeError(
            f"dense input must have {p.weight.shape[1]} features, got {x.shape[-1]}"
        )
    return softmax(x @ p.weight.T + p.bias)


def dense_backward(
    p: DenseParams, x: np.ndarray, dlogits: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    grads = {"weight": dlogits.T @ x, "bias": dlogits.sum(axis=0)}
    return dlogits @ p.weight, grads


def _as_batch(probs: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(np.asarray(labels))
    if labels.shape != (probs.shape[0],):
        raise ShapeError(f"{probs.shape[0]} rows but {labels.shape} labels")
    return probs, labels


def cross_entropy(probs: np.ndarray, labels) -> float:
    """Mean of -log(probs[label]) over the batch."""
    probs, labels = _as_batch(probs, labels)
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(-np.log(np.maximum(picked, PROBABILITY_FLOOR)).mean())


def cross_entropy_backward(probs: np.ndarray, labels) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. the softmax logits."""
    probs, labels = _as_batch(probs, labels)
    dlogits = probs.copy()
    dlogits[np.arange(probs.shape[0]), labels] -= 1.0
    return dlogits / probs.shape[0]

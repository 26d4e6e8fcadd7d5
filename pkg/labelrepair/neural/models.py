"""Parameter containers for the trainable layers.

Arrays are plain numpy arrays. Training runs in float32; gradient checks and
reference evaluations build the same containers in float64.
"""

from dataclasses import dataclass, field

import numpy as np

from labelrepair.core.exceptions import ShapeError

GATES = ("f", "i", "g", "o")

EMBEDDING_INIT_RANGE = 0.05


def glorot_uniform(
    rng: np.random.Generator, shape: tuple[int, int], dtype=np.float32
) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


@dataclass
class LstmLayerParams:
    """Per-gate weights of one LSTM layer.

    W[gate] is hidden x input, U[gate] is hidden x hidden, b[gate] has length
    hidden, for gate in f (forget), i (input), g (candidate), o (output).
    """

    W: dict[str, np.ndarray]
    U: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    def __post_init__(self):
        hidden, inputs = self.hidden_size, self.input_size
        for gate in GATES:
            if self.W[gate].shape != (hidden, inputs):
                raise ShapeError(f"W_{gate} must be {hidden}x{inputs}")
            if self.U[gate].shape != (hidden, hidden):
                raise ShapeError(f"U_{gate} must be {hidden}x{hidden}")
            if self.b[gate].shape != (hidden,):
                raise ShapeError(f"b_{gate} must have length {hidden}")

    @property
    def hidden_size(self) -> int:
        return self.W["f"].shape[0]

    @property
    def input_size(self) -> int:
        return self.W["f"].shape[1]

    @classmethod
    def initialize(
        cls,
        input_size: int,
        hidden_size: int,
        rng: np.random.Generator,
        dtype=np.float32,
    ) -> "LstmLayerParams":
        W = {g: glorot_uniform(rng, (hidden_size, input_size), dtype) for g in GATES}
        U = {g: glorot_uniform(rng, (hidden_size, hidden_size), dtype) for g in GATES}
        b = {g: np.zeros(hidden_size, dtype=dtype) for g in GATES}
        return cls(W=W, U=U, b=b)

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int, dtype=np.float32):
        return cls(
            W={g: np.zeros((hidden_size, input_size), dtype=dtype) for g in GATES},
            U={g: np.zeros((hidden_size, hidden_size), dtype=dtype) for g in GATES},
            b={g: np.zeros(hidden_size, dtype=dtype) for g in GATES},
        )

    def arrays(self) -> dict[str, np.ndarray]:
        named = {}
        for gate in GATES:
            named[f"W_{gate}"] = self.W[gate]
            named[f"U_{gate}"] = self.U[gate]
            named[f"b_{gate}"] = self.b[gate]
        return named


@dataclass
class EmbeddingParams:
    # row 0 (PAD) is an ordinary trainable row
    table: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.table.shape[0]

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    @classmethod
    def initialize(
        cls, vocab_size: int, dim: int, rng: np.random.Generator, dtype=np.float32
    ) -> "EmbeddingParams":
        table = rng.uniform(
            -EMBEDDING_INIT_RANGE, EMBEDDING_INIT_RANGE, size=(vocab_size, dim)
        )
        return cls(table=table.astype(dtype))

    def arrays(self) -> dict[str, np.ndarray]:
        return {"table": self.table}


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-3
    momentum: float = 0.99

    @classmethod
    def initialize(cls, dim: int, dtype=np.float32, **kwargs) -> "BatchNormParams":
        return cls(
            gamma=np.ones(dim, dtype=dtype),
            beta=np.zeros(dim, dtype=dtype),
            running_mean=np.zeros(dim, dtype=dtype),
            running_var=np.ones(dim, dtype=dtype),
            **kwargs,
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def state(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}


@dataclass
class DenseParams:
    weight: np.ndarray  # out x in
    bias: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.bias is None:
            self.bias = np.zeros(self.weight.shape[0], dtype=self.weight.dtype)
        if self.bias.shape != (self.weight.shape[0],):
            raise ShapeError("dense bias must match the output dimension")

    @classmethod
    def initialize(
        cls, out_dim: int, in_dim: int, rng: np.random.Generator, dtype=np.float32
    ) -> "DenseParams":
        return cls(weight=glorot_uniform(rng, (out_dim, in_dim), dtype))

    def arrays(self) -> dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

"""The dual-branch repair network.

Prefix and suffix tokens each pass through their own embedding, dropout and
LSTM stack. Their final hidden states are concatenated with the embedded
attribute values of the target event, batch-normalized and mapped to a softmax
over the activity vocabulary. Disabled branches own no parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from labelrepair.core.exceptions import ShapeError
from labelrepair.core.rng import make_rng
from labelrepair.dataset.models import EncodedBatch, Vocabulary
from labelrepair.neural.layers import (
    BatchNormCache,
    LstmStackCache,
    batchnorm_backward,
    batchnorm_forward,
    cross_entropy,
    cross_entropy_backward,
    dense_backward,
    dense_softmax,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    embedding_forward,
    lstm_stack_backward,
    lstm_stack_forward,
)
from labelrepair.neural.models import (
    BatchNormParams,
    DenseParams,
    EmbeddingParams,
    LstmLayerParams,
)
from labelrepair.repairnet.schemas import ArchitectureConfig, Checkpoint

BRANCHES = ("prefix", "suffix")
INFERENCE_CHUNK = 1024


@dataclass
class Branch:
    embedding: EmbeddingParams
    lstm: list[LstmLayerParams]


@dataclass
class ForwardCache:
    batch: EncodedBatch
    probs: np.ndarray
    branch_caches: dict[str, tuple[np.ndarray | None, LstmStackCache]] = field(
        default_factory=dict
    )
    attribute_masks: dict[str, np.ndarray | None] = field(default_factory=dict)
    widths: list[int] = field(default_factory=list)
    normalized: np.ndarray | None = None
    batchnorm: BatchNormCache | None = None


class RepairNet:
    def __init__(
        self,
        architecture: ArchitectureConfig,
        vocabulary: Vocabulary,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        self.architecture = architecture
        self.vocabulary = vocabulary
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else make_rng(0)

        self.branches: dict[str, Branch] = {}
        for name in self.enabled_branches:
            embedding = EmbeddingParams.initialize(
                vocabulary.activity_size,
                architecture.activity_embedding_dim,
                rng,
                dtype,
            )
            layers = []
            input_size = architecture.activity_embedding_dim
            for hidden_size in architecture.lstm_layer_sizes:
                layers.append(
                    LstmLayerParams.initialize(input_size, hidden_size, rng, dtype)
                )
                input_size = hidden_size
            self.branches[name] = Branch(embedding=embedding, lstm=layers)

        self.attributes: dict[str, EmbeddingParams] = {}
        if architecture.use_attributes:
            for name in vocabulary.attribute_names:
                self.attributes[name] = EmbeddingParams.initialize(
                    vocabulary.attribute_size(name),
                    architecture.attribute_dim(name),
                    rng,
                    dtype,
                )

        width = len(self.branches) * architecture.lstm_layer_sizes[-1] + sum(
            table.dim for table in self.attributes.values()
        )
        self.batchnorm = BatchNormParams.initialize(width, dtype)
        self.dense = DenseParams.initialize(vocabulary.activity_size, width, rng, dtype)

    @property
    def enabled_branches(self) -> tuple[str, ...]:
        flags = {
            "prefix": self.architecture.use_prefix,
            "suffix": self.architecture.use_suffix,
        }
        return tuple(name for name in BRANCHES if flags[name])

    # parameters

    def named_parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by stable name; the arrays are the live buffers."""
        named: dict[str, np.ndarray] = {}
        for name, branch in self.branches.items():
            named[f"{name}.embedding"] = branch.embedding.table
            for index, layer in enumerate(branch.lstm):
                for key, array in layer.arrays().items():
                    named[f"{name}.lstm.{index}.{key}"] = array
        for name, table in self.attributes.items():
            named[f"attribute.{name}.embedding"] = table.table
        for key, array in self.batchnorm.arrays().items():
            named[f"batchnorm.{key}"] = array
        for key, array in self.dense.arrays().items():
            named[f"dense.{key}"] = array
        return named

    def state_dict(self) -> dict[str, np.ndarray]:
        state = self.named_parameters()
        for key, array in self.batchnorm.state().items():
            state[f"batchnorm.{key}"] = array
        return state

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: array.copy() for name, array in self.state_dict().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        live = self.state_dict()
        if set(state) != set(live):
            missing = sorted(set(live) - set(state))
            extra = sorted(set(state) - set(live))
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, array in live.items():
            if state[name].shape != array.shape:
                raise ShapeError(
                    f"{name} has shape {state[name].shape}, expected {array.shape}"
                )
            array[...] = state[name]

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, dtype=np.float32) -> "RepairNet":
        model = cls(checkpoint.architecture, checkpoint.vocabulary, dtype=dtype)
        expected = model.state_dict()
        if set(checkpoint.params) != set(expected):
            missing = sorted(set(expected) - set(checkpoint.params))
            extra = sorted(set(checkpoint.params) - set(expected))
            raise ShapeError(
                f"checkpoint does not fit its architecture: missing {missing}, "
                f"unexpected {extra}"
            )
        model.load_state(
            {
                name: checkpoint.params[name].to_array(array.shape)
                for name, array in expected.items()
            }
        )
        return model

    # computation

    def forward(
        self,
        batch: EncodedBatch,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[np.ndarray, ForwardCache]:
        """Class probabilities for every row of `batch`."""
        rate = self.architecture.dropout_rate
        parts = []
        cache = ForwardCache(batch=batch, probs=np.empty(0))

        for name, branch in self.branches.items():
            ids = batch.prefix if name == "prefix" else batch.suffix
            if ids.shape[1] != self.architecture.k:
                raise ShapeError(
                    f"{name} has {ids.shape[1]} steps, model expects "
                    f"{self.architecture.k}"
                )
            embedded = embedding_forward(branch.embedding, ids)
            dropped, mask = dropout_forward(embedded, rate, training, rng)
            hidden, stack_cache = lstm_stack_forward(branch.lstm, dropped)
            cache.branch_caches[name] = (mask, stack_cache)
            parts.append(hidden)

        for column, (name, table) in enumerate(self.attributes.items()):
            embedded = embedding_forward(table, batch.attributes[:, column])
            dropped, mask = dropout_forward(embedded, rate, training, rng)
            cache.attribute_masks[name] = mask
            parts.append(dropped)

        cache.widths = [part.shape[1] for part in parts]
        joined = np.concatenate(parts, axis=1)
        cache.normalized, cache.batchnorm = batchnorm_forward(
            self.batchnorm, joined, training
        )
        cache.probs = dense_softmax(self.dense, cache.normalized)
        return cache.probs, cache

    def backward(
        self, cache: ForwardCache, labels: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy of the cached forward pass and its gradients."""
        loss = cross_entropy(cache.probs, labels)
        grads: dict[str, np.ndarray] = {}

        dlogits = cross_entropy_backward(cache.probs, labels)
        dnormalized, dense_grads = dense_backward(
            self.dense, cache.normalized, dlogits
        )
        djoined, bn_grads = batchnorm_backward(dnormalized, cache.batchnorm)
        pieces = np.split(djoined, np.cumsum(cache.widths)[:-1], axis=1)

        batch = cache.batch
        for (name, branch), dhidden in zip(self.branches.items(), pieces, strict=False):
            mask, stack_cache = cache.branch_caches[name]
            ids = batch.prefix if name == "prefix" else batch.suffix
            dinputs, layer_grads = lstm_stack_backward(dhidden, stack_cache)
            dembedded = dropout_backward(dinputs, mask)
            grads[f"{name}.embedding"] = embedding_backward(
                branch.embedding, ids, dembedded
            )
            for index, per_layer in enumerate(layer_grads):
                for key, grad in per_layer.items():
                    grads[f"{name}.lstm.{index}.{key}"] = grad

        attribute_pieces = pieces[len(self.branches) :]
        for column, ((name, table), dpart) in enumerate(
            zip(self.attributes.items(), attribute_pieces, strict=True)
        ):
            dembedded = dropout_backward(dpart, cache.attribute_masks[name])
            grads[f"attribute.{name}.embedding"] = embedding_backward(
                table, batch.attributes[:, column], dembedded
            )

        for key, grad in bn_grads.items():
            grads[f"batchnorm.{key}"] = grad
        for key, grad in dense_grads.items():
            grads[f"dense.{key}"] = grad
        return loss, grads

    def loss_and_gradients(
        self,
        batch: EncodedBatch,
        training: bool = True,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
        if batch.labels is None:
            raise ShapeError("training batches need labels")
        probs, cache = self.forward(batch, training=training, rng=rng)
        loss, grads = self.backward(cache, batch.labels)
        return loss, grads, probs

    def predict_proba(self, batch: EncodedBatch) -> np.ndarray:
        """Inference-mode probabilities, computed in fixed-size chunks."""
        if len(batch) == 0:
            return np.empty((0, self.vocabulary.activity_size), dtype=self.dtype)
        chunks = []
        for start in range(0, len(batch), INFERENCE_CHUNK):
            rows = np.arange(start, min(start + INFERENCE_CHUNK, len(batch)))
            probs, _ = self.forward(batch.take(rows), training=False)
            chunks.append(probs)
        return np.concatenate(chunks, axis=0)

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from pydantic import Field, PrivateAttr

from labelrepair.core.exceptions import EncodingError
from labelrepair.core.schemas import FrozenSchema


class Reserved(IntEnum):
    """Reserved ids of the activity vocabulary."""

    PAD = 0
    MISSING = 1


class AttributeReserved(IntEnum):
    """Reserved ids of every attribute vocabulary."""

    PAD = 0
    UNK = 1


RESERVED_IDS = len(Reserved)

type ContextToken = str | Reserved


class ContextConfig(FrozenSchema):
    k: int = Field(default=5, ge=1)


class Vocabulary(FrozenSchema):
    """Bijective categorical -> integer encoding.

    Non-reserved values get contiguous ids after the reserved ones, in order of
    first occurrence.
    """

    activities: tuple[str, ...] = ()
    attributes: dict[str, tuple[str, ...]] = Field(default_factory=dict)

    _activity_ids: dict[str, int] = PrivateAttr(default_factory=dict)
    _attribute_ids: dict[str, dict[str, int]] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._activity_ids = _index(self.activities, "activity")
        self._attribute_ids = {
            name: _index(values, name) for name, values in self.attributes.items()
        }

    @property
    def activity_size(self) -> int:
        return len(self.activities) + RESERVED_IDS

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(self.attributes)

    def attribute_size(self, name: str) -> int:
        return len(self.attributes[name]) + len(AttributeReserved)

    def label_ids(self) -> range:
        return range(RESERVED_IDS, self.activity_size)

    def encode_activity(self, label: str) -> int:
        try:
            return self._activity_ids[label]
        except KeyError:
            raise EncodingError(
                f"activity {label!r} is not in the vocabulary"
            ) from None

    def has_activity(self, label: str) -> bool:
        return label in self._activity_ids

    def encode_token(self, token: ContextToken) -> int:
        if isinstance(token, Reserved):
            return int(token)
        # labels never seen on a complete event still mark an existing event
        return self._activity_ids.get(token, int(Reserved.MISSING))

    def decode_activity(self, activity_id: int) -> ContextToken:
        if not 0 <= activity_id < self.activity_size:
            raise EncodingError(f"activity id {activity_id} out of range")
        if activity_id < RESERVED_IDS:
            return Reserved(activity_id)
        return self.activities[activity_id - RESERVED_IDS]

    def encode_attribute(self, name: str, value: str) -> int:
        try:
            ids = self._attribute_ids[name]
        except KeyError:
            raise EncodingError(
                f"attribute {name!r} is not in the vocabulary"
            ) from None
        return ids.get(value, int(AttributeReserved.UNK))

    def decode_attribute(self, name: str, value_id: int) -> str | AttributeReserved:
        if not 0 <= value_id < self.attribute_size(name):
            raise EncodingError(f"{name} id {value_id} out of range")
        if value_id < len(AttributeReserved):
            return AttributeReserved(value_id)
        return self.attributes[name][value_id - len(AttributeReserved)]


def _index(values: tuple[str, ...], what: str) -> dict[str, int]:
    ids = {value: offset + RESERVED_IDS for offset, value in enumerate(values)}
    if len(ids) != len(values):
        raise ValueError(f"duplicate {what} values in vocabulary")
    return ids


@dataclass(frozen=True, slots=True)
class EncodedSample:
    prefix_ids: tuple[int, ...]
    suffix_ids: tuple[int, ...]
    attribute_ids: tuple[int, ...]
    label_id: int | None
    origin: tuple[str, int]


@dataclass(frozen=True)
class EncodedBatch:
    """Column-stacked samples, the form the network consumes."""

    prefix: np.ndarray  # (n, k)
    suffix: np.ndarray  # (n, k)
    attributes: np.ndarray  # (n, number of attributes)
    labels: np.ndarray | None  # (n,)

    def __len__(self) -> int:
        return self.prefix.shape[0]

    def take(self, indices: np.ndarray) -> EncodedBatch:
        return EncodedBatch(
            prefix=self.prefix[indices],
            suffix=self.suffix[indices],
            attributes=self.attributes[indices],
            labels=None if self.labels is None else self.labels[indices],
        )

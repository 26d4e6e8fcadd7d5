import numpy as np
from pydantic import model_validator

from labelrepair.core.exceptions import ShapeError
from labelrepair.core.schemas import FrozenSchema


class ArrayPayload(FrozenSchema):
    """JSON form of one parameter array (row-major data)."""

    shape: tuple[int, ...]
    dtype: str
    data: list[float]

    @model_validator(mode="after")
    def validate_size(self):
        if len(self.data) != int(np.prod(self.shape, dtype=np.int64)):
            raise ValueError(f"{len(self.data)} values do not fill shape {self.shape}")
        return self

    @classmethod
    def from_array(cls, array: np.ndarray) -> "ArrayPayload":
        return cls(
            shape=array.shape,
            dtype=array.dtype.name,
            data=array.reshape(-1).tolist(),
        )

    def to_array(self, expected_shape: tuple[int, ...] | None = None) -> np.ndarray:
        if expected_shape is not None and tuple(expected_shape) != self.shape:
            raise ShapeError(
                f"stored shape {self.shape} does not match expected {expected_shape}"
            )
        return np.array(self.data, dtype=np.dtype(self.dtype)).reshape(self.shape)

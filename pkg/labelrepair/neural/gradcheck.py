"""Finite-difference verification of analytic gradients."""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from labelrepair.core.exceptions import ArgumentError

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
# norms below this are treated as numerically zero when forming ratios
SCALE_FLOOR = 1e-6

type LossClosure = Callable[[], tuple[float, Mapping[str, np.ndarray]]]


@dataclass(frozen=True)
class GroupError:
    name: str
    relative_error: float
    max_abs_error: float


@dataclass(frozen=True)
class GradCheckReport:
    groups: tuple[GroupError, ...]
    tolerance: float

    @property
    def max_relative_error(self) -> float:
        return max((g.relative_error for g in self.groups), default=0.0)

    @property
    def failures(self) -> tuple[GroupError, ...]:
        return tuple(g for g in self.groups if g.relative_error >= self.tolerance)

    @property
    def passed(self) -> bool:
        return not self.failures


def numerical_gradient(
    loss: Callable[[], float], array: np.ndarray, step: float = DEFAULT_STEP
) -> np.ndarray:
    """Central differences of `loss` w.r.t. every entry of `array`, in place."""
    grad = np.zeros(array.shape, dtype=np.float64)
    flat = array.reshape(-1)
    if not np.shares_memory(flat, array):
        raise ArgumentError("parameter arrays must be contiguous")
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + step
        plus = loss()
        flat[index] = original - step
        minus = loss()
        flat[index] = original
        grad.reshape(-1)[index] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = float(np.linalg.norm(analytic - numeric))
    scale = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    return diff / max(scale, SCALE_FLOOR)


def gradient_check(
    closure: LossClosure,
    params: Mapping[str, np.ndarray],
    tolerance: float = DEFAULT_TOLERANCE,
    step: float = DEFAULT_STEP,
) -> GradCheckReport:
    """Compare `closure`'s analytic gradients against central differences.

    `closure` recomputes the scalar loss and the gradient of every entry in
    `params` from the current parameter values. Checks run in 64-bit only.
    """
    for name, array in params.items():
        if array.dtype != np.float64:
            raise ArgumentError(
                f"{name} is {array.dtype}; gradient checks need float64"
            )

    _, analytic = closure()
    analytic = {
        name: np.array(grad, dtype=np.float64) for name, grad in analytic.items()
    }

    groups = []
    for name, array in params.items():
        numeric = numerical_gradient(lambda: closure()[0], array, step)
        groups.append(
            GroupError(
                name=name,
                relative_error=relative_error(analytic[name], numeric),
                max_abs_error=float(
                    np.max(np.abs(analytic[name] - numeric), initial=0.0)
                ),
            )
        )
    report = GradCheckReport(groups=tuple(groups), tolerance=tolerance)
    for failure in report.failures:
        logger.warning(
            f"Gradient mismatch in {failure.name}: "
            f"relative error {failure.relative_error:.3e}"
        )
    return report

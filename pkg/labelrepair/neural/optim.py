from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

MOMENTUM_SCHEDULE_DECAY = 0.96


@dataclass
class Nadam:
    """Adam with Nesterov momentum and a momentum warm-up schedule.

    Per step t, with mu_t = beta_1 * (1 - 0.5 * 0.96**t) and u_prod the running
    product of mu_1..mu_t:

        m <- m + (1 - beta_1) * (g - m)
        v <- v + (1 - beta_2) * (g**2 - v)
        m_hat = mu_{t+1} * m / (1 - u_prod * mu_{t+1}) + (1 - mu_t) * g / (1 - u_prod)
        v_hat = v / (1 - beta_2**t)
        param <- param - lr * m_hat / (sqrt(v_hat) + epsilon)

    Parameters are updated in place.
    """

    learning_rate: float = 0.001
    beta_1: float = 0.9
    beta_2: float = 0.999
    epsilon: float = 1e-7
    iterations: int = 0
    u_product: float = 1.0
    _momentums: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    _velocities: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def _mu(self, step: int) -> float:
        return self.beta_1 * (1.0 - 0.5 * MOMENTUM_SCHEDULE_DECAY**step)

    def step(
        self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]
    ) -> None:
        t = self.iterations + 1
        mu_t = self._mu(t)
        mu_next = self._mu(t + 1)
        self.u_product *= mu_t
        u_product_next = self.u_product * mu_next
        beta_2_power = self.beta_2**t

        for name, param in params.items():
            grad = grads[name]
            m = self._momentums.setdefault(name, np.zeros_like(param))
            v = self._velocities.setdefault(name, np.zeros_like(param))
            m += (grad - m) * (1.0 - self.beta_1)
            v += (grad * grad - v) * (1.0 - self.beta_2)
            m_hat = mu_next * m / (1.0 - u_product_next) + (1.0 - mu_t) * grad / (
                1.0 - self.u_product
            )
            v_hat = v / (1.0 - beta_2_power)
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
        self.iterations = t

    def constants(self) -> dict[str, float | str]:
        return {
            "name": "nadam",
            "learning_rate": self.learning_rate,
            "beta_1": self.beta_1,
            "beta_2": self.beta_2,
            "epsilon": self.epsilon,
        }

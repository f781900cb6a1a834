"""Named parameter collections and the Adam update rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .tensor import Tensor


@dataclass
class ParamSet:
    """Named parameter tensors plus per-parameter Adam moments.

    Moment arrays always mirror the parameter shapes; `step` increases by
    exactly one per optimizer step.
    """

    params: dict[str, Tensor]
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        for name, p in self.params.items():
            p.requires_grad = True
            self.first_moment.setdefault(name, np.zeros_like(p.data))
            self.second_moment.setdefault(name, np.zeros_like(p.data))

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def gradients(self) -> dict[str, np.ndarray]:
        """Current gradients, with zeros for parameters not touched."""
        return {
            name: (np.zeros_like(p.data) if p.grad is None else p.grad)
            for name, p in self.params.items()
        }

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            incoming = values[name]
            if incoming.shape != p.data.shape:
                raise ValueError(f"shape mismatch for parameter {name!r}")
            p.data = incoming.copy()


def adam_step(params: ParamSet, grads: dict[str, np.ndarray],
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> ParamSet:
    """One bias-corrected Adam update over every named parameter."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ValueError("betas must lie in [0, 1)")
    for name, p in params.params.items():
        g = grads.get(name)
        if g is None or g.shape != p.data.shape:
            raise ValueError(f"gradient missing or mis-shaped for {name!r}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name!r}")
    params.step += 1
    t = params.step
    for name, p in params.params.items():
        g = grads[name]
        m = params.first_moment[name]
        v = params.second_moment[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params

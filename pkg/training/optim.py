"""
Adam with bias correction over ModelParams.

Parameters are updated in place in sorted tensor-name order.
"""
from dataclasses import dataclass, field

import numpy as np

from neuhash.exceptions import ShapeError


@dataclass
class AdamState:
    step: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params):
        return cls(
            step=0,
            first={name: np.zeros_like(params[name]) for name in params},
            second={name: np.zeros_like(params[name]) for name in params},
        )


def _check_shapes(params, grads, state):
    names = set(params.tensors)
    for label, other in (('gradients', grads.tensors), ('first moments', state.first), ('second moments', state.second)):
        if set(other) != names:
            raise ShapeError(f"{label} cover {sorted(other)}, params cover {sorted(names)}")
        for name in names:
            if other[name].shape != params[name].shape:
                raise ShapeError(f"{label}[{name}] has shape {other[name].shape}, param has {params[name].shape}")


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), epsilon=1e-8):
    _check_shapes(params, grads, state)
    beta1, beta2 = betas
    state.step += 1
    bias1 = 1.0 - beta1 ** state.step
    bias2 = 1.0 - beta2 ** state.step

    for name in params:
        g = grads[name]
        first, second = state.first[name], state.second[name]
        first *= beta1
        first += (1.0 - beta1) * g
        second *= beta2
        second += (1.0 - beta2) * (g * g)
        params[name] -= (lr / bias1) * first / (np.sqrt(second / bias2) + epsilon)
    return params, state

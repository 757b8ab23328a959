"""
.. autoexception:: NumericalFailureError
.. autofunction:: check_finite

.. autoclass:: AdamState
.. autofunction:: adam_step
.. autoclass:: Adam
"""

from __future__ import annotations


__copyright__ = "Copyright (C) 2026 TractOracle developers"

__license__ = """
Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
THE SOFTWARE.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np


if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from tractoracle.tensor.primitives import Leaf
    from tractoracle.typing import FloatArray


class NumericalFailureError(ArithmeticError):
    pass


def check_finite(what: str, value: float | FloatArray) -> None:
    """
    :raises NumericalFailureError: if *value* contains NaN or infinity.
    """
    if not np.all(np.isfinite(value)):
        raise NumericalFailureError(f"{what} is not finite: {value}")


@dataclass
class AdamState:
    """First and second moment estimates, aligned with the parameter list
    they were created for.
    """
    m: list[FloatArray]
    v: list[FloatArray]
    step: int = 0

    @staticmethod
    def zeros_like(params: Sequence[FloatArray]) -> AdamState:
        return AdamState(
                m=[np.zeros_like(param) for param in params],
                v=[np.zeros_like(param) for param in params])


def adam_step(
        params: Sequence[FloatArray],
        grads: Sequence[FloatArray | None],
        state: AdamState,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8) -> AdamState:
    """Apply one bias-corrected Adam update to *params* in place. Entries of
    *grads* that are *None* leave their parameter and moments untouched.

    :returns: *state*, updated in place.
    """
    if not len(params) == len(grads) == len(state.m) == len(state.v):
        raise ValueError("params, grads and optimizer state are not aligned")

    state.step += 1
    correction1 = 1 - beta1**state.step
    correction2 = 1 - beta2**state.step

    for param, grad, m, v in zip(params, grads, state.m, state.v, strict=True):
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise ValueError(f"gradient of shape {grad.shape} does not match "
                    f"parameter of shape {param.shape}")

        m *= beta1
        m += (1 - beta1)*grad
        v *= beta2
        v += (1 - beta2)*grad*grad

        m_hat = m / correction1
        v_hat = v / correction2
        param -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(param.dtype)

    return state


@dataclass
class Adam:
    """Adam over a set of named :class:`~tractoracle.tensor.primitives.Leaf`
    parameters.

    .. automethod:: step
    .. automethod:: zero_grad
    .. automethod:: state_arrays
    .. automethod:: load_state_arrays
    """

    params: dict[str, Leaf]
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    state: AdamState = field(init=False)

    def __post_init__(self) -> None:
        self.state = AdamState.zeros_like(
                [param.data for param in self.params.values()])

    def step(self) -> None:
        leaves = list(self.params.values())
        adam_step([leaf.data for leaf in leaves], [leaf.grad for leaf in leaves],
                self.state, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for leaf in self.params.values():
            leaf.grad = None

    def state_arrays(self, prefix: str = "adam") -> dict[str, FloatArray]:
        """Return the moments as ``{prefix}.m.<name>``/``{prefix}.v.<name>``
        arrays. The step count is not an array; archive :attr:`AdamState.step`
        separately as an integer.
        """
        result: dict[str, FloatArray] = {}
        for name, m, v in zip(self.params, self.state.m, self.state.v,
                strict=True):
            result[f"{prefix}.m.{name}"] = m
            result[f"{prefix}.v.{name}"] = v
        return result

    def load_state_arrays(self, arrays: Mapping[str, FloatArray],
            prefix: str = "adam", step: int = 0) -> None:
        for i, name in enumerate(self.params):
            self.state.m[i][...] = arrays[f"{prefix}.m.{name}"]
            self.state.v[i][...] = arrays[f"{prefix}.v.{name}"]
        self.state.step = step

"""
Parameter containers
--------------------

.. autoclass:: Module
.. autoclass:: Linear
.. autoclass:: LayerNorm
.. autoclass:: MLP
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

from collections.abc import Mapping, Sequence
from typing import TYPE_CHECKING, Any

import numpy as np

from pytools import product

from tractoracle.tensor.primitives import Leaf, Tensor, layer_norm, relu


if TYPE_CHECKING:
    from collections.abc import Callable

    from tractoracle.typing import FloatArray


class Module:
    """Base class for objects owning trainable :class:`Leaf` parameters.
    Parameters and submodules are discovered from instance attributes, in
    attribute definition order; lists of submodules are numbered.

    .. automethod:: named_parameters
    .. automethod:: state_dict
    .. automethod:: load_state_dict
    .. autoproperty:: n_parameters
    """

    def named_parameters(self, prefix: str = "") -> dict[str, Leaf]:
        result: dict[str, Leaf] = {}
        for attr, val in vars(self).items():
            if attr.startswith("_"):
                continue
            name = f"{prefix}{attr}"
            if isinstance(val, Leaf) and val.requires_grad:
                result[name] = val
            elif isinstance(val, Module):
                result.update(val.named_parameters(f"{name}."))
            elif isinstance(val, list):
                for i, sub in enumerate(val):
                    if isinstance(sub, Module):
                        result.update(sub.named_parameters(f"{name}.{i}."))
        return result

    def parameters(self) -> list[Leaf]:
        return list(self.named_parameters().values())

    @property
    def n_parameters(self) -> int:
        return sum(product(param.shape) for param in self.parameters())

    def state_dict(self) -> dict[str, FloatArray]:
        return {name: param.data.copy()
                for name, param in self.named_parameters().items()}

    def load_state_dict(self, state: Mapping[str, FloatArray]) -> None:
        """Copy *state* into the parameters in place.

        :raises KeyError: if parameter names do not match exactly.
        :raises ValueError: on a shape mismatch.
        """
        params = self.named_parameters()
        missing = set(params) - set(state)
        unexpected = set(state) - set(params)
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing {sorted(missing)}, "
                    f"unexpected {sorted(unexpected)}")

        for name, param in params.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise ValueError(f"parameter '{name}' has shape {param.shape}, "
                        f"state has shape {value.shape}")
            param.data[...] = value

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None


def _uniform(rng: np.random.Generator, bound: float, shape: tuple[int, ...],
        dtype: Any, name: str) -> Leaf:
    return Leaf(rng.uniform(-bound, bound, size=shape).astype(dtype),
            requires_grad=True, name=name)


class Linear(Module):
    """Affine map ``x @ weight + bias`` with weights drawn from
    ``U(-1/sqrt(in_dim), 1/sqrt(in_dim))``.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
            dtype: Any = np.float64, bias: bool = True) -> None:
        self.in_dim = in_dim
        self.out_dim = out_dim

        bound = 1/np.sqrt(in_dim)
        self.weight = _uniform(rng, bound, (in_dim, out_dim), dtype, "weight")
        self.bias = (_uniform(rng, bound, (out_dim,), dtype, "bias")
                if bias else None)

    def __call__(self, x: Tensor) -> Tensor:
        result = x @ self.weight
        if self.bias is not None:
            result = result + self.bias
        return result


class LayerNorm(Module):
    def __init__(self, dim: int, dtype: Any = np.float64, eps: float = 1e-5) -> None:
        self.eps = eps
        self.gamma = Leaf(np.ones(dim, dtype=dtype), requires_grad=True,
                name="gamma")
        self.beta = Leaf(np.zeros(dim, dtype=dtype), requires_grad=True,
                name="beta")

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)


class MLP(Module):
    """A stack of :class:`Linear` layers of the given *sizes* with
    *activation* between them (none after the last).
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator,
            dtype: Any = np.float64,
            activation: Callable[[Tensor], Tensor] = relu) -> None:
        if len(sizes) < 2:
            raise ValueError(f"an MLP needs at least 2 sizes, got {list(sizes)}")
        self._activation = activation
        self.layers = [Linear(n_in, n_out, rng, dtype)
                for n_in, n_out in zip(sizes[:-1], sizes[1:], strict=True)]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = self._activation(x)
        return x

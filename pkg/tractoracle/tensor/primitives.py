"""
Graph nodes
-----------

Every tensor value in a computation is a node of an acyclic graph. Leaves
hold data (parameters, inputs, constants); every other node is an operation
whose value is computed from its operands as soon as it is built, and whose
operands are kept so that :func:`~tractoracle.tensor.differentiator.backward`
can visit the graph in reverse.

Broadcasting is restricted to *leading-batch* broadcasting: for a binary
elementwise operation, the shape of one operand must be a suffix of the
shape of the other (scalars broadcast against everything). Any other
combination raises :exc:`ShapeError`.

.. autoexception:: ShapeError

.. autofunction:: tensor_op
.. autofunction:: no_grad
.. autofunction:: is_grad_enabled
.. autofunction:: as_tensor

.. autoclass:: Tensor
.. autoclass:: Leaf
.. autoclass:: Operation

Operations
^^^^^^^^^^

.. autoclass:: MatMul
.. autoclass:: Add
.. autoclass:: Mul
.. autoclass:: Scale
.. autoclass:: Softmax
.. autoclass:: LayerNormOp
.. autoclass:: Relu
.. autoclass:: Tanh
.. autoclass:: Sigmoid
.. autoclass:: Exp
.. autoclass:: Log
.. autoclass:: Mean
.. autoclass:: Sum
.. autoclass:: Transpose
.. autoclass:: Concat
.. autoclass:: Slice
.. autoclass:: Reshape
.. autoclass:: Minimum
.. autoclass:: Clamp
.. autoclass:: GaussianSample
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

import re
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field, fields
from sys import intern
from typing import TYPE_CHECKING, Any, ClassVar, TypeVar

import numpy as np
from typing_extensions import TypeIs, dataclass_transform


if TYPE_CHECKING:
    from tractoracle.typing import FloatArray


class ShapeError(ValueError):
    pass


# {{{ gradient recording switch

_GRAD_ENABLED: ContextVar[bool] = ContextVar("_GRAD_ENABLED", default=True)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Within this context, newly built operations do not require gradients,
    so that :func:`~tractoracle.tensor.differentiator.backward` never reaches
    past them. The switch is per thread.
    """
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)

# }}}


# {{{ dataclass support

# word boundaries of a CamelCase class name without acronyms: before every
# uppercase letter except the first
_WORD_START_RE = re.compile(r"(?<!^)(?=[A-Z])")

_T = TypeVar("_T")


@dataclass_transform()
def tensor_op(cls: type[_T]) -> type[_T]:
    """A class decorator that makes *cls* a :func:`~dataclasses.dataclass`
    with identity-based equality and hashing (graph nodes are distinct
    objects even when structurally equal), and assigns a
    :attr:`Tensor.mapper_method` derived from the class name unless the
    class sets one itself.
    """
    dc_cls = dataclass(eq=False, repr=False)(cls)

    if "mapper_method" not in cls.__dict__:
        snake_clsname = _WORD_START_RE.sub("_", cls.__name__).lower()
        dc_cls.mapper_method = intern(f"map_{snake_clsname}")  # type: ignore[attr-defined]

    return dc_cls

# }}}


# {{{ shape helpers

def check_suffix_broadcast(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Return the broadcast shape of *a* and *b* under the leading-batch rule.

    :raises ShapeError: if neither shape is a suffix of the other.
    """
    if len(a) >= len(b):
        longer, shorter = a, b
    else:
        longer, shorter = b, a

    if longer[len(longer)-len(shorter):] != shorter:
        raise ShapeError(f"shapes {a} and {b} are not compatible "
                "(only leading-batch broadcasting is supported)")
    return longer


def reduce_to_shape(grad: FloatArray, shape: tuple[int, ...]) -> FloatArray:
    """Sum *grad* over the leading axes that broadcasting added to *shape*."""
    n_extra = grad.ndim - len(shape)
    if n_extra > 0:
        grad = grad.sum(axis=tuple(range(n_extra)))
    return grad


def normalize_axes(axis: int | tuple[int, ...] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))

# }}}


# {{{ base classes

class Tensor:
    """Base class of all graph nodes.

    .. attribute:: value

        The :class:`numpy.ndarray` computed for this node.

    .. attribute:: requires_grad
    .. attribute:: grad

        Accumulated gradient (leaves only), or *None*.

    .. attribute:: mapper_method

        The name of the method called on a
        :class:`~tractoracle.tensor.mapper.Mapper` when it visits this node.

    .. autoproperty:: shape
    .. autoproperty:: children
    """

    value: FloatArray
    requires_grad: bool
    grad: FloatArray | None
    mapper_method: ClassVar[str]

    # {{{ properties

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.value.dtype

    @property
    def children(self) -> tuple[Tensor, ...]:
        return ()

    def item(self) -> float:
        return float(self.value.reshape(()))

    def numpy(self) -> FloatArray:
        return self.value

    # }}}

    # {{{ arithmetic

    def _wrap(self, other: object) -> Tensor:
        return as_tensor(other, dtype=self.dtype)

    def __add__(self, other: object) -> Tensor:
        return Add(self, self._wrap(other))

    def __radd__(self, other: object) -> Tensor:
        return Add(self._wrap(other), self)

    def __sub__(self, other: object) -> Tensor:
        if is_tensor(other):
            return Add(self, Scale(other, -1.))
        return Add(self, self._wrap(-np.asarray(other)))

    def __rsub__(self, other: object) -> Tensor:
        return Add(self._wrap(other), Scale(self, -1.))

    def __mul__(self, other: object) -> Tensor:
        if not is_tensor(other) and np.ndim(other) == 0:
            return Scale(self, float(other))  # type: ignore[arg-type]
        return Mul(self, self._wrap(other))

    def __rmul__(self, other: object) -> Tensor:
        if not is_tensor(other) and np.ndim(other) == 0:
            return Scale(self, float(other))  # type: ignore[arg-type]
        return Mul(self._wrap(other), self)

    def __truediv__(self, other: object) -> Tensor:
        if is_tensor(other) or np.ndim(other) != 0:
            raise TypeError("division is only supported by scalar constants")
        return Scale(self, 1/float(other))  # type: ignore[arg-type]

    def __neg__(self) -> Tensor:
        return Scale(self, -1.)

    def __matmul__(self, other: object) -> Tensor:
        return MatMul(self, self._wrap(other))

    def __rmatmul__(self, other: object) -> Tensor:
        return MatMul(self._wrap(other), self)

    def __getitem__(self, index: Any) -> Tensor:
        if not isinstance(index, tuple):
            index = (index,)
        return Slice(self, index)

    @property
    def T(self) -> Tensor:  # noqa: N802
        axes = list(range(self.ndim))
        axes[-2], axes[-1] = axes[-1], axes[-2]
        return Transpose(self, tuple(axes))

    def sum(self, axis: int | tuple[int, ...] | None = None,
            keepdims: bool = False) -> Tensor:
        return Sum(self, axis, keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None,
            keepdims: bool = False) -> Tensor:
        return Mean(self, axis, keepdims)

    def reshape(self, *shape: int) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Reshape(self, tuple(shape))

    # }}}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape}, dtype={self.dtype})"


def is_tensor(x: object) -> TypeIs[Tensor]:
    return isinstance(x, Tensor)


@tensor_op
class Leaf(Tensor):
    """A node without operands: an input, a constant or a trainable parameter.

    .. attribute:: data
    .. attribute:: name
    """

    data: FloatArray
    requires_grad: bool = False
    name: str | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data)
        self.grad = None

    @property
    def value(self) -> FloatArray:  # type: ignore[override]
        return self.data

    def __repr__(self) -> str:
        return (f"Leaf(name={self.name!r}, shape={self.shape}, "
                f"requires_grad={self.requires_grad})")


def as_tensor(x: object, dtype: Any = None) -> Tensor:
    """Return *x* if it is a :class:`Tensor`, otherwise wrap it in a
    constant :class:`Leaf` of *dtype*.
    """
    if is_tensor(x):
        return x
    return Leaf(np.asarray(x, dtype=dtype))


class Operation(Tensor):
    """Base class for nodes computed from operands. The value is computed by
    :class:`~tractoracle.tensor.evaluator.ForwardMapper` when the node is
    constructed.
    """

    def __post_init__(self) -> None:
        from tractoracle.tensor.evaluator import forward
        self.value = forward(self)
        self.grad = None
        self.requires_grad = (is_grad_enabled()
                and any(child.requires_grad for child in self.children))

    @property
    def children(self) -> tuple[Tensor, ...]:
        result: list[Tensor] = []
        for fld in fields(self):  # type: ignore[arg-type]
            val = getattr(self, fld.name)
            if is_tensor(val):
                result.append(val)
            elif isinstance(val, tuple):
                result.extend(v for v in val if is_tensor(v))
        return tuple(result)

# }}}


# {{{ operations

@tensor_op
class MatMul(Operation):
    """Batched matrix product. *a* has shape ``(..., m, k)``; *b* has shape
    ``(k, n)`` or ``(..., k, n)`` with batch dimensions a suffix of *a*'s.
    """
    a: Tensor
    b: Tensor


@tensor_op
class Add(Operation):
    a: Tensor
    b: Tensor


@tensor_op
class Mul(Operation):
    a: Tensor
    b: Tensor


@tensor_op
class Scale(Operation):
    """Multiplication by a constant scalar *factor*."""
    a: Tensor
    factor: float


@tensor_op
class Softmax(Operation):
    """Softmax along *axis*, computed with the maximum subtracted."""
    a: Tensor
    axis: int = -1


@tensor_op
class LayerNormOp(Operation):
    """Normalization over the last axis followed by the affine map
    ``gamma * xhat + beta``.
    """
    a: Tensor
    gamma: Tensor
    beta: Tensor
    eps: float = 1e-5

    mapper_method: ClassVar[str] = "map_layer_norm"


@tensor_op
class ElementwiseOp(Operation):
    a: Tensor


@tensor_op
class Relu(ElementwiseOp):
    pass


@tensor_op
class Tanh(ElementwiseOp):
    pass


@tensor_op
class Sigmoid(ElementwiseOp):
    pass


@tensor_op
class Exp(ElementwiseOp):
    pass


@tensor_op
class Log(ElementwiseOp):
    """Natural logarithm of the operand clamped below at :data:`LOG_CLAMP`."""


LOG_CLAMP = 1e-12


@tensor_op
class Reduction(Operation):
    a: Tensor
    axis: int | tuple[int, ...] | None = None
    keepdims: bool = False


@tensor_op
class Mean(Reduction):
    pass


@tensor_op
class Sum(Reduction):
    pass


@tensor_op
class Transpose(Operation):
    a: Tensor
    axes: tuple[int, ...]


@tensor_op
class Concat(Operation):
    operands: tuple[Tensor, ...]
    axis: int = 0


@tensor_op
class Slice(Operation):
    """Basic (non-advanced) indexing by a tuple of integers and slices."""
    a: Tensor
    index: tuple[Any, ...]


@tensor_op
class Reshape(Operation):
    a: Tensor
    new_shape: tuple[int, ...]


@tensor_op
class Minimum(Operation):
    """Elementwise minimum; ties route the gradient to *a*."""
    a: Tensor
    b: Tensor


@tensor_op
class Clamp(Operation):
    a: Tensor
    lower: float
    upper: float


LOG_STD_MIN = -20.
LOG_STD_MAX = 2.


@tensor_op
class GaussianSample(Operation):
    """Reparameterized sample ``mean + exp(log_std) * noise`` with *log_std*
    clamped to ``[LOG_STD_MIN, LOG_STD_MAX]``. *noise* is a constant array of
    standard normal draws.
    """
    # explicit field() so the inherited Tensor.mean method is not taken as a default
    mean: Tensor = field()
    log_std: Tensor
    noise: FloatArray

# }}}


# {{{ functional interface

def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul(a, b)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    return Softmax(a, axis)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    return LayerNormOp(a, gamma, beta, eps)


def relu(a: Tensor) -> Tensor:
    return Relu(a)


def tanh(a: Tensor) -> Tensor:
    return Tanh(a)


def sigmoid(a: Tensor) -> Tensor:
    return Sigmoid(a)


def exp(a: Tensor) -> Tensor:
    return Exp(a)


def log(a: Tensor) -> Tensor:
    return Log(a)


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    return Transpose(a, tuple(axes))


def concat(operands: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat(tuple(operands), axis)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    return Minimum(a, b)


def clamp(a: Tensor, lower: float, upper: float) -> Tensor:
    return Clamp(a, lower, upper)


def gaussian_sample(mean: Tensor, log_std: Tensor,
        noise: FloatArray | None = None,
        rng: np.random.Generator | None = None) -> Tensor:
    """Draw a reparameterized Gaussian sample. Exactly one of *noise* and
    *rng* must be given.
    """
    if noise is None:
        if rng is None:
            raise ValueError("one of 'noise' and 'rng' must be given")
        noise = rng.standard_normal(mean.shape).astype(mean.dtype)
    return GaussianSample(mean, log_std, np.asarray(noise, dtype=mean.dtype))


def square(a: Tensor) -> Tensor:
    return Mul(a, a)


# }}}

# vim: foldmethod=marker

"""
Reverse-mode differentiation
----------------------------

.. autoexception:: ContractError
.. autoclass:: BackwardMapper
.. autofunction:: backward
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

from typing import TYPE_CHECKING

import numpy as np

import tractoracle.tensor.primitives as p
from tractoracle.tensor.evaluator import layer_norm_parts
from tractoracle.tensor.mapper import Mapper, topological_order
from tractoracle.tensor.primitives import normalize_axes, reduce_to_shape


if TYPE_CHECKING:
    from tractoracle.typing import FloatArray


class ContractError(RuntimeError):
    pass


def _expand_reduced(grad: FloatArray, expr: p.Reduction) -> FloatArray:
    shape = expr.a.shape
    if not expr.keepdims:
        grad = np.expand_dims(grad, normalize_axes(expr.axis, len(shape)))
    return np.broadcast_to(grad, shape)


class BackwardMapper(Mapper[tuple["FloatArray", ...], ["FloatArray"]]):
    """Maps an operation node and the gradient of the output with respect to
    that node's value to the gradients with respect to each of
    :attr:`~tractoracle.tensor.primitives.Tensor.children`, in order
    (vector-Jacobian products).
    """

    def map_mat_mul(self, expr: p.MatMul, grad: FloatArray) -> tuple[FloatArray, ...]:
        a, b = expr.a.value, expr.b.value
        grad_a = grad @ np.swapaxes(b, -1, -2)
        grad_b = np.swapaxes(a, -1, -2) @ grad
        return (reduce_to_shape(grad_a, a.shape),
                reduce_to_shape(grad_b, b.shape))

    def map_add(self, expr: p.Add, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (reduce_to_shape(grad, expr.a.shape),
                reduce_to_shape(grad, expr.b.shape))

    def map_mul(self, expr: p.Mul, grad: FloatArray) -> tuple[FloatArray, ...]:
        a, b = expr.a.value, expr.b.value
        return (reduce_to_shape(grad*b, a.shape),
                reduce_to_shape(grad*a, b.shape))

    def map_minimum(self, expr: p.Minimum, grad: FloatArray) -> tuple[FloatArray, ...]:
        a, b = expr.a.value, expr.b.value
        take_a = a <= b
        return (reduce_to_shape(np.where(take_a, grad, 0), a.shape),
                reduce_to_shape(np.where(take_a, 0, grad), b.shape))

    def map_scale(self, expr: p.Scale, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (grad*expr.factor,)

    def map_softmax(self, expr: p.Softmax, grad: FloatArray) -> tuple[FloatArray, ...]:
        y = expr.value
        return (y*(grad - (grad*y).sum(axis=expr.axis, keepdims=True)),)

    def map_layer_norm(self,
            expr: p.LayerNormOp, grad: FloatArray) -> tuple[FloatArray, ...]:
        x, gamma = expr.a.value, expr.gamma.value
        xhat, inv_std = layer_norm_parts(x, expr.eps)
        n = x.shape[-1]

        grad_xhat = grad*gamma
        grad_x = inv_std/n * (
                n*grad_xhat
                - grad_xhat.sum(axis=-1, keepdims=True)
                - xhat*(grad_xhat*xhat).sum(axis=-1, keepdims=True))

        lead = tuple(range(x.ndim - 1))
        return (grad_x, (grad*xhat).sum(axis=lead), grad.sum(axis=lead))

    def map_relu(self, expr: p.Relu, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (np.where(expr.a.value > 0, grad, 0),)

    def map_tanh(self, expr: p.Tanh, grad: FloatArray) -> tuple[FloatArray, ...]:
        y = expr.value
        return (grad*(1 - y*y),)

    def map_sigmoid(self, expr: p.Sigmoid, grad: FloatArray) -> tuple[FloatArray, ...]:
        y = expr.value
        return (grad*y*(1 - y),)

    def map_exp(self, expr: p.Exp, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (grad*expr.value,)

    def map_log(self, expr: p.Log, grad: FloatArray) -> tuple[FloatArray, ...]:
        x = expr.a.value
        clamped = x <= p.LOG_CLAMP
        return (np.where(clamped, 0, grad/np.where(clamped, 1, x)),)

    def map_mean(self, expr: p.Mean, grad: FloatArray) -> tuple[FloatArray, ...]:
        count = expr.a.value.size // max(expr.value.size, 1)
        return (_expand_reduced(grad, expr) / count,)

    def map_sum(self, expr: p.Sum, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (_expand_reduced(grad, expr),)

    def map_transpose(self,
            expr: p.Transpose, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (np.transpose(grad, np.argsort(expr.axes)),)

    def map_concat(self, expr: p.Concat, grad: FloatArray) -> tuple[FloatArray, ...]:
        axis = expr.axis % grad.ndim
        sizes = [op.shape[axis] for op in expr.operands]
        return tuple(np.split(grad, np.cumsum(sizes)[:-1], axis=axis))

    def map_slice(self, expr: p.Slice, grad: FloatArray) -> tuple[FloatArray, ...]:
        result = np.zeros_like(expr.a.value)
        result[expr.index] += grad
        return (result,)

    def map_reshape(self, expr: p.Reshape, grad: FloatArray) -> tuple[FloatArray, ...]:
        return (grad.reshape(expr.a.shape),)

    def map_clamp(self, expr: p.Clamp, grad: FloatArray) -> tuple[FloatArray, ...]:
        x = expr.a.value
        inside = (x >= expr.lower) & (x <= expr.upper)
        return (np.where(inside, grad, 0),)

    def map_gaussian_sample(self,
            expr: p.GaussianSample, grad: FloatArray) -> tuple[FloatArray, ...]:
        log_std = expr.log_std.value
        inside = (log_std >= p.LOG_STD_MIN) & (log_std <= p.LOG_STD_MAX)
        std = np.exp(np.clip(log_std, p.LOG_STD_MIN, p.LOG_STD_MAX))
        return (grad, np.where(inside, grad*std*expr.noise, 0))


_BACKWARD = BackwardMapper()


def backward(root: p.Tensor, grad: FloatArray | None = None) -> None:
    """Accumulate the gradient of *root* into the
    :attr:`~tractoracle.tensor.primitives.Tensor.grad` of every leaf with
    ``requires_grad`` reachable from it. Each node is visited exactly once, in
    reverse topological order; gradients arriving along several paths are
    summed.

    :arg grad: the gradient with respect to *root*'s value. May be omitted
        only if *root* has exactly one element.
    :raises ContractError: if *root* does not require gradients, or if *grad*
        is omitted for a non-scalar *root*.
    """
    if not root.requires_grad:
        raise ContractError("output does not depend on any tensor that "
                "requires gradients")

    if grad is None:
        if root.value.size != 1:
            raise ContractError("gradient must be given for an output of "
                    f"shape {root.shape}")
        grad = np.ones_like(root.value)

    order = topological_order(root, include=lambda node: node.requires_grad)

    grads: dict[p.Tensor, FloatArray] = {root: np.asarray(grad, dtype=root.dtype)}
    for node in reversed(order):
        node_grad = grads.pop(node, None)
        if node_grad is None:
            continue

        if isinstance(node, p.Leaf):
            node.grad = node_grad.copy() if node.grad is None else (
                    node.grad + node_grad)
            continue

        child_grads = _BACKWARD(node, node_grad)
        for child, child_grad in zip(node.children, child_grads, strict=True):
            if not child.requires_grad:
                continue
            if child in grads:
                grads[child] = grads[child] + child_grad
            else:
                grads[child] = child_grad

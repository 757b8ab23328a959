"""
.. autoclass:: ForwardMapper
.. autofunction:: forward
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
from scipy.special import expit

import tractoracle.tensor.primitives as p
from tractoracle.tensor.mapper import Mapper
from tractoracle.tensor.primitives import ShapeError, check_suffix_broadcast


if TYPE_CHECKING:
    from tractoracle.typing import FloatArray


def layer_norm_parts(x: FloatArray, eps: float) -> tuple[FloatArray, FloatArray]:
    """Return ``(xhat, inv_std)`` for normalization over the last axis."""
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered*centered).mean(axis=-1, keepdims=True)
    inv_std = 1/np.sqrt(var + eps)
    return centered*inv_std, inv_std


class ForwardMapper(Mapper["FloatArray", []]):
    """Computes the value of an operation node from the values of its
    operands. Shape compatibility is checked here.
    """

    def map_leaf(self, expr: p.Leaf) -> FloatArray:
        return expr.data

    def map_mat_mul(self, expr: p.MatMul) -> FloatArray:
        a, b = expr.a.value, expr.b.value
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
        if b.ndim > 2:
            batch_a, batch_b = a.shape[:-2], b.shape[:-2]
            if batch_a[len(batch_a)-len(batch_b):] != batch_b:
                raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}"
                        " (batch dimensions of the second operand must be a"
                        " suffix of those of the first)")
        return a @ b

    def _binary_elementwise(self, expr: p.Add | p.Mul) -> tuple[FloatArray, FloatArray]:
        a, b = expr.a.value, expr.b.value
        check_suffix_broadcast(a.shape, b.shape)
        return a, b

    def map_add(self, expr: p.Add) -> FloatArray:
        a, b = self._binary_elementwise(expr)
        return a + b

    def map_mul(self, expr: p.Mul) -> FloatArray:
        a, b = self._binary_elementwise(expr)
        return a * b

    def map_minimum(self, expr: p.Minimum) -> FloatArray:
        a, b = expr.a.value, expr.b.value
        check_suffix_broadcast(a.shape, b.shape)
        return np.minimum(a, b)

    def map_scale(self, expr: p.Scale) -> FloatArray:
        return expr.a.value * expr.a.value.dtype.type(expr.factor)

    def map_softmax(self, expr: p.Softmax) -> FloatArray:
        a = expr.a.value
        shifted = np.exp(a - a.max(axis=expr.axis, keepdims=True))
        return shifted / shifted.sum(axis=expr.axis, keepdims=True)

    def map_layer_norm(self, expr: p.LayerNormOp) -> FloatArray:
        x = expr.a.value
        gamma, beta = expr.gamma.value, expr.beta.value
        if gamma.shape != x.shape[-1:] or beta.shape != x.shape[-1:]:
            raise ShapeError(f"layer norm parameters of shapes {gamma.shape} and "
                    f"{beta.shape} do not match input of shape {x.shape}")
        xhat, _ = layer_norm_parts(x, expr.eps)
        return xhat*gamma + beta

    def map_relu(self, expr: p.Relu) -> FloatArray:
        return np.maximum(expr.a.value, 0)

    def map_tanh(self, expr: p.Tanh) -> FloatArray:
        return np.tanh(expr.a.value)

    def map_sigmoid(self, expr: p.Sigmoid) -> FloatArray:
        return expit(expr.a.value)

    def map_exp(self, expr: p.Exp) -> FloatArray:
        return np.exp(expr.a.value)

    def map_log(self, expr: p.Log) -> FloatArray:
        return np.log(np.maximum(expr.a.value, p.LOG_CLAMP))

    def map_mean(self, expr: p.Mean) -> FloatArray:
        return np.asarray(expr.a.value.mean(axis=expr.axis, keepdims=expr.keepdims))

    def map_sum(self, expr: p.Sum) -> FloatArray:
        return np.asarray(expr.a.value.sum(axis=expr.axis, keepdims=expr.keepdims))

    def map_transpose(self, expr: p.Transpose) -> FloatArray:
        return np.transpose(expr.a.value, expr.axes)

    def map_concat(self, expr: p.Concat) -> FloatArray:
        values = [op.value for op in expr.operands]
        ndim = values[0].ndim
        axis = expr.axis % ndim
        ref = values[0].shape
        for val in values[1:]:
            if (val.ndim != ndim
                    or val.shape[:axis] != ref[:axis]
                    or val.shape[axis+1:] != ref[axis+1:]):
                raise ShapeError(f"cannot concatenate shapes {ref} and {val.shape} "
                        f"along axis {expr.axis}")
        return np.concatenate(values, axis=axis)

    def map_slice(self, expr: p.Slice) -> FloatArray:
        return expr.a.value[expr.index]

    def map_reshape(self, expr: p.Reshape) -> FloatArray:
        try:
            return expr.a.value.reshape(expr.new_shape)
        except ValueError as err:
            raise ShapeError(f"cannot reshape {expr.a.shape} to {expr.new_shape}"
                    ) from err

    def map_clamp(self, expr: p.Clamp) -> FloatArray:
        return np.clip(expr.a.value, expr.lower, expr.upper)

    def map_gaussian_sample(self, expr: p.GaussianSample) -> FloatArray:
        mean, log_std = expr.mean.value, expr.log_std.value
        if mean.shape != log_std.shape or mean.shape != expr.noise.shape:
            raise ShapeError(f"mean of shape {mean.shape} and log-std of shape "
                    f"{log_std.shape} do not match noise of shape "
                    f"{expr.noise.shape}")
        std = np.exp(np.clip(log_std, p.LOG_STD_MIN, p.LOG_STD_MAX))
        return mean + std*expr.noise


_FORWARD = ForwardMapper()


def forward(expr: p.Tensor) -> FloatArray:
    return _FORWARD(expr)

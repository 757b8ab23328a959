"""
A small dense-tensor engine with reverse-mode automatic differentiation.

Values are :class:`numpy.ndarray` objects; every operation on a
:class:`~tractoracle.tensor.primitives.Tensor` builds a graph node whose
value is computed immediately, and
:func:`~tractoracle.tensor.differentiator.backward` propagates gradients
through the recorded graph.
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

from tractoracle.tensor.checkpoint import read_tensors, write_tensors
from tractoracle.tensor.differentiator import ContractError, backward
from tractoracle.tensor.gradcheck import grad_check, grad_check_parameters
from tractoracle.tensor.mapper import Mapper, UnsupportedOperationError
from tractoracle.tensor.nn import MLP, LayerNorm, Linear, Module
from tractoracle.tensor.optim import (
    Adam,
    AdamState,
    NumericalFailureError,
    adam_step,
    check_finite,
)
from tractoracle.tensor.primitives import (
    Leaf,
    ShapeError,
    Tensor,
    as_tensor,
    clamp,
    concat,
    exp,
    gaussian_sample,
    layer_norm,
    log,
    matmul,
    minimum,
    no_grad,
    relu,
    sigmoid,
    softmax,
    square,
    tanh,
    transpose,
)


__all__ = [
    "MLP",
    "Adam",
    "AdamState",
    "ContractError",
    "LayerNorm",
    "Leaf",
    "Linear",
    "Mapper",
    "Module",
    "NumericalFailureError",
    "ShapeError",
    "Tensor",
    "UnsupportedOperationError",
    "adam_step",
    "as_tensor",
    "backward",
    "check_finite",
    "clamp",
    "concat",
    "exp",
    "gaussian_sample",
    "grad_check",
    "grad_check_parameters",
    "layer_norm",
    "log",
    "matmul",
    "minimum",
    "no_grad",
    "read_tensors",
    "relu",
    "sigmoid",
    "softmax",
    "square",
    "tanh",
    "transpose",
    "write_tensors",
]

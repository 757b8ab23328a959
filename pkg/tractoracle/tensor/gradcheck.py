"""
.. autofunction:: grad_check
.. autofunction:: grad_check_parameters
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

import logging
from typing import TYPE_CHECKING

import numpy as np

from tractoracle.tensor.differentiator import ContractError, backward
from tractoracle.tensor.primitives import Leaf, no_grad


if TYPE_CHECKING:
    from collections.abc import Callable, Mapping

    from tractoracle.tensor.primitives import Tensor
    from tractoracle.typing import FloatArray


logger = logging.getLogger(__name__)


def _relative_error(analytic: FloatArray, numeric: FloatArray,
        floor: float = 1e-8) -> float:
    denom = np.maximum(floor, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom, initial=0.))


def _scalar_output(out: Tensor) -> float:
    if out.value.size != 1:
        raise ContractError("gradient check requires a scalar-valued function, "
                f"got output of shape {out.shape}")
    return out.item()


def grad_check(f: Callable[[Tensor], Tensor], x: FloatArray,
        h: float = 1e-5) -> float:
    """Compare the reverse-mode gradient of the scalar function *f* at *x*
    with central differences of step *h*, coordinate by coordinate.

    :returns: the maximum over coordinates of
        ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)``.
    :raises ContractError: if *f* does not return a single element.
    """
    x = np.array(x, dtype=np.float64)

    leaf = Leaf(x.copy(), requires_grad=True)
    out = f(leaf)
    _scalar_output(out)
    backward(out)
    analytic = leaf.grad if leaf.grad is not None else np.zeros_like(x)

    numeric = np.zeros_like(x)
    with no_grad():
        for idx in np.ndindex(x.shape):
            orig = x[idx]
            x[idx] = orig + h
            f_plus = _scalar_output(f(Leaf(x.copy())))
            x[idx] = orig - h
            f_minus = _scalar_output(f(Leaf(x.copy())))
            x[idx] = orig
            numeric[idx] = (f_plus - f_minus) / (2*h)

    return _relative_error(analytic, numeric)


def grad_check_parameters(f: Callable[[], Tensor], params: Mapping[str, Leaf],
        h: float = 1e-5,
        n_samples: int | None = None,
        rng: np.random.Generator | None = None,
        floor: float = 1e-8) -> float:
    """Like :func:`grad_check`, but differentiates the closure *f* with
    respect to the parameters *params*, perturbing them in place. With
    *n_samples*, only that many coordinates per parameter, drawn with *rng*,
    are compared.

    *floor* bounds the denominator of the relative error from below, so that
    gradients that vanish analytically are compared in absolute terms.
    """
    for param in params.values():
        param.grad = None

    out = f()
    _scalar_output(out)
    backward(out)

    if n_samples is not None and rng is None:
        rng = np.random.default_rng(0)

    max_err = 0.
    for name, param in params.items():
        analytic = (param.grad if param.grad is not None
                else np.zeros_like(param.data))

        all_indices = list(np.ndindex(param.shape))
        if n_samples is not None and n_samples < len(all_indices):
            assert rng is not None
            picks = rng.choice(len(all_indices), size=n_samples, replace=False)
            indices = [all_indices[i] for i in sorted(picks)]
        else:
            indices = all_indices

        an = np.empty(len(indices))
        num = np.empty(len(indices))
        with no_grad():
            for i, idx in enumerate(indices):
                orig = param.data[idx]
                param.data[idx] = orig + h
                f_plus = _scalar_output(f())
                param.data[idx] = orig - h
                f_minus = _scalar_output(f())
                param.data[idx] = orig
                num[i] = (f_plus - f_minus) / (2*h)
                an[i] = analytic[idx]

        err = _relative_error(an, num, floor)
        logger.debug("gradient check '%s': max relative error %.3e", name, err)
        max_err = max(max_err, err)

    return max_err

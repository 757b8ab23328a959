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

import io
import logging
import os
import stat
import sys
import threading

import numpy as np
import pytest

from tractoracle.container import FileFormatError
from tractoracle.tensor import (
    MLP,
    Adam,
    AdamState,
    ContractError,
    LayerNorm,
    Leaf,
    ShapeError,
    adam_step,
    backward,
    clamp,
    concat,
    exp,
    gaussian_sample,
    grad_check,
    grad_check_parameters,
    layer_norm,
    log,
    minimum,
    no_grad,
    read_tensors,
    relu,
    sigmoid,
    softmax,
    tanh,
    transpose,
    write_tensors,
)
from tractoracle.tensor import primitives as prim
from tractoracle.tensor.evaluator import ForwardMapper
from tractoracle.tensor.primitives import LOG_STD_MAX, LOG_STD_MIN, is_grad_enabled


logger = logging.getLogger(__name__)


GRAD_TOL = 1e-5


def _projector(shape, seed=0):
    """Return a function reducing a tensor of *shape* to a scalar with fixed
    random weights, so that no gradient vanishes by symmetry.
    """
    weights = np.random.default_rng(seed).standard_normal(shape)

    def project(t):
        assert t.shape == weights.shape
        return (t*Leaf(weights)).sum()

    return project


# {{{ gradient checks per primitive

def _away_from(x, points, margin=0.1):
    """Nudge entries of *x* at least *margin* away from each of *points*."""
    x = x.copy()
    for p in points:
        close = np.abs(x - p) < margin
        x[close] = p + np.where(x[close] >= p, margin, -margin)
    return x


UNARY_CASES = [
    ("relu", lambda x: relu(x), lambda x: _away_from(x, [0.])),
    ("tanh", lambda x: tanh(x), lambda x: x),
    ("sigmoid", lambda x: sigmoid(x), lambda x: x),
    ("exp", lambda x: exp(x), lambda x: x),
    ("log", lambda x: log(x), lambda x: np.abs(x) + 0.5),
    ("softmax_last", lambda x: softmax(x, axis=-1), lambda x: x),
    ("softmax_first", lambda x: softmax(x, axis=0), lambda x: x),
    ("scale", lambda x: x*(-2.5), lambda x: x),
    ("divide", lambda x: x/4., lambda x: x),
    ("square", lambda x: x*x, lambda x: x),
    ("clamp", lambda x: clamp(x, -0.7, 0.8),
        lambda x: _away_from(x, [-0.7, 0.8], 0.05)),
    ]


@pytest.mark.parametrize(("name", "op", "prepare"), UNARY_CASES,
        ids=[case[0] for case in UNARY_CASES])
def test_grad_unary(name, op, prepare):
    rng = np.random.default_rng(1)
    x = prepare(rng.standard_normal((3, 4)))
    project = _projector((3, 4))
    assert grad_check(lambda t: project(op(t)), x) < GRAD_TOL


@pytest.mark.parametrize(("axis", "keepdims"),
        [(None, False), (0, False), (1, True), ((0, 2), False)])
def test_grad_reductions(axis, keepdims):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 3, 4))
    for reduce in ["sum", "mean"]:
        out_shape = getattr(x, reduce)(axis=axis, keepdims=keepdims).shape
        project = _projector(out_shape)
        assert grad_check(
                lambda t, reduce=reduce: project(
                    getattr(t, reduce)(axis=axis, keepdims=keepdims)),
                x) < GRAD_TOL


def test_grad_matmul():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((2, 3, 4))
    b = rng.standard_normal((4, 5))

    project = _projector((2, 3, 5))
    assert grad_check(lambda t: project(t @ Leaf(b)), a) < GRAD_TOL
    assert grad_check(lambda t: project(Leaf(a) @ t), b) < GRAD_TOL

    # batched right operand
    c = rng.standard_normal((2, 4, 5))
    assert grad_check(lambda t: project(Leaf(a) @ t), c) < GRAD_TOL


def test_grad_broadcast_add_mul():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(4)
    other = rng.standard_normal((2, 3, 4))
    project = _projector((2, 3, 4))
    assert grad_check(lambda t: project(t + Leaf(other)), x) < GRAD_TOL
    assert grad_check(lambda t: project(Leaf(other)*t), x) < GRAD_TOL
    assert grad_check(lambda t: project(Leaf(other) - t), x) < GRAD_TOL

    # a scalar broadcasts with anything
    assert grad_check(lambda t: project(Leaf(other)*t), np.array(1.3)) < GRAD_TOL


def test_grad_layer_norm():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((3, 6))
    gamma = rng.standard_normal(6)
    beta = rng.standard_normal(6)
    project = _projector((3, 6))

    assert grad_check(
            lambda t: project(layer_norm(t, Leaf(gamma), Leaf(beta))), x) < GRAD_TOL
    assert grad_check(
            lambda t: project(layer_norm(Leaf(x), t, Leaf(beta))), gamma) < GRAD_TOL
    assert grad_check(
            lambda t: project(layer_norm(Leaf(x), Leaf(gamma), t)), beta) < GRAD_TOL


def test_grad_shape_operations():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((2, 3, 4))
    other = rng.standard_normal((2, 1, 4))

    cases = [
        (lambda t: transpose(t, (2, 0, 1)), (4, 2, 3)),
        (lambda t: t.T, (2, 4, 3)),
        (lambda t: t.reshape(6, 4), (6, 4)),
        (lambda t: t[:, 1:, ::2], (2, 2, 2)),
        (lambda t: t[0], (3, 4)),
        (lambda t: concat([t, Leaf(other)], axis=1), (2, 4, 4)),
        (lambda t: concat([t, t], axis=-1), (2, 3, 8)),
        ]
    for op, shape in cases:
        project = _projector(shape)
        assert grad_check(lambda t, op=op, project=project: project(op(t)),
                x) < GRAD_TOL


def test_grad_minimum():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((3, 4))
    other = rng.standard_normal((3, 4))
    other = np.where(np.abs(other - x) < 0.1, x + 0.5, other)
    project = _projector((3, 4))
    assert grad_check(lambda t: project(minimum(t, Leaf(other))), x) < GRAD_TOL
    assert grad_check(lambda t: project(minimum(Leaf(other), t)), x) < GRAD_TOL


def test_grad_gaussian_sample():
    rng = np.random.default_rng(8)
    x = np.stack([rng.standard_normal(5), rng.uniform(-1, 1, 5)])
    noise = rng.standard_normal(5)
    project = _projector((5,))
    assert grad_check(
            lambda t: project(gaussian_sample(t[0], t[1], noise)), x) < GRAD_TOL


def test_gaussian_sample_clamps_log_std():
    mean = Leaf(np.zeros(3))
    log_std = Leaf(np.array([-50., 0., 50.]))
    noise = np.ones(3)
    sample = gaussian_sample(mean, log_std, noise)
    assert np.allclose(sample.value,
            [np.exp(LOG_STD_MIN), 1., np.exp(LOG_STD_MAX)])

    with pytest.raises(ValueError):
        gaussian_sample(mean, log_std)


def test_grad_composite_network():
    rng = np.random.default_rng(9)
    mlp = MLP([4, 8, 8, 2], rng)
    norm = LayerNorm(2)
    x = Leaf(rng.standard_normal((5, 4)))
    project = _projector((5, 2))

    params = {**mlp.named_parameters("mlp."), **norm.named_parameters("norm.")}
    err = grad_check_parameters(lambda: project(norm(tanh(mlp(x)))), params,
            n_samples=6, rng=rng)
    assert err < GRAD_TOL

# }}}


# {{{ backward semantics

def test_shared_subexpression_accumulates():
    x = Leaf(np.array([1.5, -2.]), requires_grad=True)
    y = x*x + x
    backward(y.sum())
    assert np.allclose(x.grad, 2*x.data + 1)

    # a second backward pass accumulates
    backward((x*3.).sum())
    assert np.allclose(x.grad, 2*x.data + 4)


def test_backward_contract():
    x = Leaf(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        backward(x*2.)
    backward(x*2., np.array([1., 2., 3.]))
    assert np.array_equal(x.grad, [2., 4., 6.])

    with pytest.raises(ContractError):
        backward(Leaf(np.ones(())) + 1.)


def test_no_grad():
    x = Leaf(np.ones(3), requires_grad=True)
    assert is_grad_enabled()
    with no_grad():
        assert not is_grad_enabled()
        y = (x*2.).sum()
    assert is_grad_enabled()
    assert not y.requires_grad
    assert y.item() == 6.
    with pytest.raises(ContractError):
        backward(y)


def test_no_grad_is_per_thread():
    seen = []

    def worker():
        seen.append(is_grad_enabled())

    with no_grad():
        thread = threading.Thread(target=worker)
        thread.start()
        thread.join()
    assert seen == [True]


def test_shape_errors():
    with pytest.raises(ShapeError):
        Leaf(np.zeros(3)) + Leaf(np.zeros(4))
    with pytest.raises(ShapeError):
        Leaf(np.zeros((2, 3))) * Leaf(np.zeros((3, 3)))
    with pytest.raises(TypeError):
        Leaf(np.ones(3)) / Leaf(np.ones(3))


@pytest.mark.parametrize(("cls", "method"), [
    (prim.Leaf, "map_leaf"),
    (prim.MatMul, "map_mat_mul"),
    (prim.LayerNormOp, "map_layer_norm"),
    (prim.ElementwiseOp, "map_elementwise_op"),
    (prim.GaussianSample, "map_gaussian_sample"),
    ])
def test_mapper_method_names(cls, method):
    assert cls.mapper_method == method


def test_every_operation_is_mapped():
    for cls in vars(prim).values():
        if (isinstance(cls, type) and issubclass(cls, prim.Tensor)
                and cls not in (prim.Tensor, prim.Operation, prim.ElementwiseOp,
                    prim.Reduction)):
            assert hasattr(ForwardMapper, cls.mapper_method), cls.__name__

# }}}


# {{{ optimizer

def test_adam_first_step_has_size_lr():
    param = np.array([1., -2., 3.])
    grad = np.array([0.5, -4., 1e3])
    state = AdamState.zeros_like([param])
    adam_step([param], [grad], state, lr=0.01)
    assert np.allclose(param, [1 - 0.01, -2 + 0.01, 3 - 0.01], atol=1e-8)
    assert state.step == 1


def test_adam_skips_missing_gradients():
    a = np.array([1.])
    b = np.array([2.])
    state = AdamState.zeros_like([a, b])
    adam_step([a, b], [np.array([1.]), None], state, lr=0.1)
    assert b[0] == 2.
    assert state.m[1][0] == 0.
    assert a[0] != 1.

    with pytest.raises(ValueError):
        adam_step([a], [np.ones(2)], AdamState.zeros_like([a]), lr=0.1)


def test_adam_minimizes_quadratic():
    target = np.array([3., -1., 0.5])
    x = Leaf(np.zeros(3), requires_grad=True)
    opt = Adam({"x": x}, lr=0.05)
    for _ in range(1000):
        opt.zero_grad()
        diff = x - target
        backward((diff*diff).sum())
        opt.step()
    assert np.allclose(x.data, target, atol=1e-2)


def test_adam_state_arrays_restore():
    x = Leaf(np.zeros(2), requires_grad=True)
    opt = Adam({"x": x}, lr=0.1)
    x.grad = np.array([1., 2.])
    opt.step()

    arrays = opt.state_arrays("opt")
    assert set(arrays) == {"opt.m.x", "opt.v.x"}

    restored = Adam({"x": Leaf(np.zeros(2), requires_grad=True)}, lr=0.1)
    restored.load_state_arrays(arrays, "opt", opt.state.step)
    assert restored.state.step == 1
    assert np.array_equal(restored.state.m[0], opt.state.m[0])

# }}}


# {{{ tensor archives

def _roundtrip(tensors, config=None):
    buf = io.BytesIO()
    write_tensors(buf, tensors, config=config)
    return read_tensors(io.BytesIO(buf.getvalue()))


def test_tensor_archive():
    rng = np.random.default_rng(10)
    tensors = {
        "w": rng.standard_normal((3, 4)),
        "scalar": np.array(2.5),
        "empty": np.zeros((0, 2)),
        }
    config, read = _roundtrip(tensors, {"kind": "test", "n": [1, 2]})
    assert config == {"kind": "test", "n": [1, 2]}
    assert list(read) == list(tensors)
    for name, ary in tensors.items():
        assert read[name].dtype == np.float32
        assert read[name].shape == ary.shape
        assert np.array_equal(read[name], ary.astype(np.float32))

    config, _ = _roundtrip(tensors)
    assert config is None


def test_tensor_archive_errors(tmp_path):
    with pytest.raises(ValueError):
        _roundtrip({"__config__": np.zeros(1)})

    buf = io.BytesIO()
    write_tensors(buf, {"w": np.ones(3)})
    data = buf.getvalue()

    with pytest.raises(FileFormatError):
        read_tensors(io.BytesIO(b"XXXX" + data[4:]))
    with pytest.raises(FileFormatError):
        read_tensors(io.BytesIO(data[:-2]))
    with pytest.raises(FileFormatError):
        read_tensors(io.BytesIO(data + b"\0"))

    path = tmp_path / "weights.tnsr"
    write_tensors(path, {"w": np.ones(3)})
    _, read = read_tensors(path)
    assert np.array_equal(read["w"], np.ones(3))
    assert [p.name for p in tmp_path.iterdir()] == ["weights.tnsr"]


@pytest.mark.skipif(sys.platform == "win32", reason="POSIX permissions")
@pytest.mark.parametrize("umask", [0o022, 0o077])
def test_archive_file_mode_follows_umask(tmp_path, umask):
    old_umask = os.umask(umask)
    try:
        path = tmp_path / "weights.tnsr"
        write_tensors(path, {"w": np.ones(3)})
    finally:
        os.umask(old_umask)
    assert stat.S_IMODE(os.stat(path).st_mode) == 0o666 & ~umask

# }}}


if __name__ == "__main__":
    import sys
    if len(sys.argv) > 1:
        exec(sys.argv[1])
    else:
        from pytest import main
        main([__file__])

# vim: fdm=marker

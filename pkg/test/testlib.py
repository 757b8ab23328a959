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


from dataclasses import replace
from typing import Any

import numpy as np

from pytools import memoize

from tractoracle.env import EnvConfig
from tractoracle.oracle import OracleConfig, OracleModel
from tractoracle.phantom import DEMO_PHANTOMS, PhantomVolume, generate_phantom
from tractoracle.sac import SacConfig


# {{{ small configurations

TINY_ORACLE = OracleConfig(n_points=8, embed_dim=8, n_blocks=1, n_heads=2,
        ffn_dim=16, dtype="float64")


def tiny_oracle_config(**kwargs: Any) -> OracleConfig:
    return replace(TINY_ORACLE, **kwargs)


def tiny_sac_config(**kwargs: Any) -> SacConfig:
    base = SacConfig(hidden_dim=16, n_layers=1, batch_size=8,
            buffer_capacity=64, n_seeds_per_epoch=4, epochs=1, dtype="float64")
    return replace(base, **kwargs)


def small_env_config(**kwargs: Any) -> EnvConfig:
    return replace(EnvConfig(n_previous_directions=2), **kwargs)

# }}}


# {{{ phantoms

@memoize
def demo_volume(name: str) -> PhantomVolume:
    return generate_phantom(DEMO_PHANTOMS[name])

# }}}


# {{{ oracles with a fixed score

def constant_oracle(value: float, config: OracleConfig = TINY_ORACLE) -> OracleModel:
    """Return an oracle scoring every streamline *value*, by zeroing the
    output head's weights and setting its bias to the logit of *value*.
    """
    model = OracleModel(config)
    model.head.weight.data[...] = 0
    assert model.head.bias is not None
    model.head.bias.data[...] = np.log(value/(1 - value))
    return model

# }}}


# {{{ random geometry

def random_walk(rng: np.random.Generator, n: int, step: float = 1.,
        start: tuple[float, float, float] = (0., 0., 0.)) -> np.ndarray:
    """A streamline of *n* points with steps of length *step* in random
    directions.
    """
    dirs = rng.standard_normal((n - 1, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return np.concatenate([
        np.array([start], dtype=np.float64),
        np.array(start) + np.cumsum(step*dirs, axis=0)])


def affine_field(dims: tuple[int, int, int], coefficients: np.ndarray,
        offset: float) -> np.ndarray:
    """Sample ``offset + coefficients . (i, j, k)`` on the grid *dims*."""
    grid = np.indices(dims, dtype=np.float64)
    return offset + np.einsum("i,ixyz->xyz", coefficients, grid)

# }}}

# vim: foldmethod=marker

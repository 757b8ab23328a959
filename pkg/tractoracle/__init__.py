"""
Oracle-guided reinforcement-learning tractography on synthetic phantoms.
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

from tractoracle import env, evaluator, geometry, oracle, phantom, sac, tensor, tracker
from tractoracle.env import EnvConfig, TrackingEnvironment
from tractoracle.evaluator import EvaluatorConfig, TractometerReport, report, segment
from tractoracle.oracle import OracleConfig, OracleModel, score, train_oracle
from tractoracle.phantom import (
    PhantomSpec,
    PhantomVolume,
    generate_phantom,
    synthesize_labeled_set,
)
from tractoracle.sac import SacAgent, SacConfig, act, update
from tractoracle.tracker import track_baseline, track_policy
from tractoracle.tractogram import Tractogram, read_tractogram, write_tractogram
from tractoracle.version import VERSION_TEXT as __version__  # noqa: N811


__all__ = (
    "EnvConfig",
    "EvaluatorConfig",
    "OracleConfig",
    "OracleModel",
    "PhantomSpec",
    "PhantomVolume",
    "SacAgent",
    "SacConfig",
    "TractometerReport",
    "Tractogram",
    "TrackingEnvironment",
    "__version__",
    "act",
    "env",
    "evaluator",
    "generate_phantom",
    "geometry",
    "oracle",
    "phantom",
    "read_tractogram",
    "report",
    "sac",
    "score",
    "segment",
    "synthesize_labeled_set",
    "tensor",
    "track_baseline",
    "track_policy",
    "tracker",
    "train_oracle",
    "update",
    "write_tractogram",
)

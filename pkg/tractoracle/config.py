"""
Run configuration
-----------------

A run is configured by an INI file with the sections ``[phantom]``,
``[data]``, ``[oracle]``, ``[env]``, ``[sac]``, ``[track]``, ``[eval]`` and
``[run]``. Every key is optional and defaults to the value of the
corresponding configuration field; unknown sections and keys are errors.

.. code-block:: ini

    [phantom]
    spec = two-arcs-one-crossing

    [env]
    alpha = 10
    max_angle = 30

    [run]
    seed = 1

All randomness derives from ``[run] seed``, split into independent named
streams by :meth:`RunConfig.stage_seed`.

.. autoexception:: ConfigError
.. autoclass:: DataConfig
.. autoclass:: OracleTrainingConfig
.. autoclass:: RunConfig
.. autofunction:: load_config
.. autofunction:: parse_config
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

import configparser
import hashlib
import json
import logging
import zlib
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from typing import TYPE_CHECKING, Any

import numpy as np
from immutabledict import immutabledict

from tractoracle.env import EnvConfig
from tractoracle.evaluator import EvaluatorConfig
from tractoracle.oracle import OracleConfig
from tractoracle.sac import SacConfig
from tractoracle.tracker import TrackingConfig


if TYPE_CHECKING:
    import os
    from collections.abc import Mapping


logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# {{{ section types

@dataclass(frozen=True)
class DataConfig:
    """Size of the synthesized oracle training set."""

    n_positive: int = 1000
    n_negative: int = 1000

    def __post_init__(self) -> None:
        if self.n_positive < 1 or self.n_negative < 1:
            raise ValueError("need at least one example per class")


@dataclass(frozen=True)
class OracleTrainingConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    validation_fraction: float = 0.1
    augmentation: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("invalid oracle training parameters")
        if not 0 <= self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class PhantomSection:
    spec: str = "two-arcs-one-crossing"


@dataclass(frozen=True)
class TrackSection:
    per_voxel_seeds: int = 20
    deterministic: bool = True
    chunk_size: int = 512
    method: str = "agent"

    def __post_init__(self) -> None:
        if self.method not in ("agent", "baseline"):
            raise ValueError(f"track method must be 'agent' or 'baseline', "
                    f"got '{self.method}'")

    def tracking_config(self, workers: int) -> TrackingConfig:
        return TrackingConfig(
                per_voxel_seeds=self.per_voxel_seeds,
                deterministic=self.deterministic,
                workers=workers,
                chunk_size=self.chunk_size)


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be positive")

# }}}


# {{{ run configuration

# keys that are derived rather than configured
_EXCLUDED_KEYS: Mapping[str, frozenset[str]] = immutabledict({
    "sac": frozenset({"rng_seed"}),
    })


@dataclass(frozen=True)
class RunConfig:
    """
    .. attribute:: phantom
    .. attribute:: data
    .. attribute:: oracle
    .. attribute:: oracle_training
    .. attribute:: env
    .. attribute:: sac
    .. attribute:: track
    .. attribute:: evaluation
    .. attribute:: run

    .. automethod:: stage_seed
    .. automethod:: canonical_text
    .. automethod:: digest
    """

    phantom: PhantomSection = field(default_factory=PhantomSection)
    data: DataConfig = field(default_factory=DataConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    oracle_training: OracleTrainingConfig = field(
            default_factory=OracleTrainingConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    track: TrackSection = field(default_factory=TrackSection)
    evaluation: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    run: RunSection = field(default_factory=RunSection)

    def stage_seed(self, stage: str) -> int:
        """Seed of the named random stream *stage*, derived from the run
        seed. Distinct stage names give independent streams.
        """
        ss = np.random.SeedSequence(
                [self.run.seed, zlib.crc32(stage.encode("utf-8"))])
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    def sections(self) -> dict[str, dict[str, Any]]:
        """The configuration as INI sections and values."""
        return {
            "phantom": asdict(self.phantom),
            "data": asdict(self.data),
            "oracle": {**asdict(self.oracle), **asdict(self.oracle_training)},
            "env": asdict(self.env),
            "sac": {k: val for k, val in asdict(self.sac).items()
                if k not in _EXCLUDED_KEYS["sac"]},
            "track": asdict(self.track),
            "eval": asdict(self.evaluation),
            "run": asdict(self.run),
            }

    def canonical_text(self) -> str:
        """A normalized JSON rendering: equal configurations give equal
        text.
        """
        return json.dumps(self.sections(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    def with_overrides(self, seed: int | None = None,
            workers: int | None = None) -> RunConfig:
        run = self.run
        if seed is not None:
            run = replace(run, seed=seed)
        if workers is not None:
            run = replace(run, workers=workers)
        return replace(self, run=run)

# }}}


# {{{ parsing

# section name -> the dataclasses its keys populate
_SECTION_TYPES: Mapping[str, tuple[type, ...]] = immutabledict({
    "phantom": (PhantomSection,),
    "data": (DataConfig,),
    "oracle": (OracleConfig, OracleTrainingConfig),
    "env": (EnvConfig,),
    "sac": (SacConfig,),
    "track": (TrackSection,),
    "eval": (EvaluatorConfig,),
    "run": (RunSection,),
    })


def _coerce(parser: configparser.ConfigParser, section: str, key: str,
        default: Any) -> Any:
    try:
        if isinstance(default, bool):
            return parser.getboolean(section, key)
        if isinstance(default, int):
            return parser.getint(section, key)
        if isinstance(default, float):
            return parser.getfloat(section, key)
    except ValueError as err:
        raise ConfigError(f"[{section}] {key}: {err}") from err
    return parser.get(section, key)


def _build(cls: type, section: str, values: dict[str, Any]) -> Any:
    try:
        return cls(**values)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[{section}]: {err}") from err


def parse_config(text: str) -> RunConfig:
    """Parse INI *text* into a :class:`RunConfig`.

    :raises ConfigError: on unknown sections or keys, unparseable values or
        values the configuration types reject.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed configuration: {err}") from err

    unknown_sections = sorted(set(parser.sections()) - set(_SECTION_TYPES))
    if unknown_sections:
        raise ConfigError("unknown configuration sections: "
                + ", ".join(unknown_sections))

    built: dict[str, list[Any]] = {}
    unknown_keys: list[str] = []
    for section, classes in _SECTION_TYPES.items():
        keys = set(parser.options(section)) if parser.has_section(section) else set()
        excluded = _EXCLUDED_KEYS.get(section, frozenset())

        recognized: set[str] = set()
        built[section] = []
        for cls in classes:
            values = {}
            for fld in fields(cls):
                if fld.name in excluded:
                    continue
                recognized.add(fld.name)
                if fld.name in keys:
                    default = (fld.default if fld.default is not MISSING
                            else fld.default_factory())  # type: ignore[misc]
                    values[fld.name] = _coerce(parser, section, fld.name, default)
            built[section].append(_build(cls, section, values))

        unknown_keys.extend(f"[{section}] {key}" for key in sorted(keys - recognized))

    if unknown_keys:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown_keys))

    return RunConfig(
            phantom=built["phantom"][0],
            data=built["data"][0],
            oracle=built["oracle"][0],
            oracle_training=built["oracle"][1],
            env=built["env"][0],
            sac=built["sac"][0],
            track=built["track"][0],
            evaluation=built["eval"][0],
            run=built["run"][0])


def load_config(path: str | os.PathLike[str] | None) -> RunConfig:
    """Read the configuration file at *path*, or return the defaults if
    *path* is *None*.
    """
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as inf:
            text = inf.read()
    except OSError as err:
        raise ConfigError(f"cannot read configuration '{path}': {err}") from err

    logger.debug("read configuration from '%s'", path)
    return parse_config(text)

# }}}

# vim: foldmethod=marker

"""
Command line
------------

``tractoracle <subcommand>`` runs one stage of the workflow (build a phantom,
synthesize oracle training data, train the oracle, train an agent, track,
evaluate) or, with ``pipeline``, all of them in sequence.

Every artifact is written atomically and accompanied by
``<artifact>.manifest.json``, recording the subcommand, the configuration
digest, the random seeds and the SHA-256 of every input and of the artifact.
Manifests hold no timestamps, so that reruns reproduce them byte for byte.

Exit status is 0 on success, 1 on invalid input or configuration and 2 when
training produced non-finite values.

.. autofunction:: main
.. autofunction:: build_parser
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

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

from tractoracle.config import RunConfig, load_config
from tractoracle.container import open_output
from tractoracle.evaluator import (
    format_report,
    format_summary,
    report,
    summarize_reports,
    write_report,
    write_summary,
)
from tractoracle.geometry import OutOfBoundsError
from tractoracle.oracle import (
    filter_tractogram,
    load_oracle,
    save_oracle,
    score_batch,
    train_oracle,
)
from tractoracle.phantom import (
    SynthesisError,
    generate_phantom,
    load_phantom_spec,
    read_labeled_set,
    read_phantom,
    synthesize_labeled_set,
    write_labeled_set,
    write_phantom,
)
from tractoracle.sac import load_agent, train as train_agent
from tractoracle.tensor import NumericalFailureError
from tractoracle.tracker import track_baseline, track_policy
from tractoracle.tractogram import read_tractogram, write_scores, write_tractogram


if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from tractoracle.evaluator import TractometerReport
    from tractoracle.oracle import OracleModel
    from tractoracle.tractogram import Tractogram


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


# {{{ manifests

def file_digest(path: str | os.PathLike[str]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as inf:
        for block in iter(lambda: inf.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class Manifest:
    subcommand: str
    config: RunConfig
    seeds: dict[str, int] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)

    def add_input(self, path: str) -> None:
        self.inputs[path] = file_digest(path)

    def write(self, artifact: str) -> None:
        doc: dict[str, Any] = {
            "subcommand": self.subcommand,
            "config_sha256": self.config.digest(),
            "config": self.config.sections(),
            "seeds": dict(sorted(self.seeds.items())),
            "inputs": dict(sorted(self.inputs.items())),
            "artifact": {
                "path": os.path.basename(artifact),
                "sha256": file_digest(artifact),
                },
            }
        with open_output(f"{artifact}.manifest.json") as outf:
            outf.write((json.dumps(doc, indent=2, sort_keys=True) + "\n")
                    .encode("utf-8"))

# }}}


# {{{ stages

def _oracle_or_none(path: str | None, manifest: Manifest) -> OracleModel | None:
    if path is None:
        return None
    manifest.add_input(path)
    return load_oracle(path)


def run_phantom_gen(cfg: RunConfig, spec: str | None, output: str) -> None:
    spec = spec or cfg.phantom.spec
    manifest = Manifest("phantom-gen", cfg)
    if os.path.exists(spec):
        manifest.add_input(spec)

    seed = manifest.seeds["phantom"] = cfg.stage_seed("phantom")
    write_phantom(output, generate_phantom(load_phantom_spec(spec), rng_seed=seed))
    manifest.write(output)


def run_oracle_data(cfg: RunConfig, phantom: str, output: str) -> None:
    manifest = Manifest("oracle-data", cfg)
    manifest.add_input(phantom)
    v = read_phantom(phantom)

    seed = manifest.seeds["data"] = cfg.stage_seed("data")
    data = synthesize_labeled_set(v, cfg.data.n_positive, cfg.data.n_negative,
            rng_seed=seed)
    write_labeled_set(output, data)
    manifest.write(output)


def run_oracle_train(cfg: RunConfig, data_path: str, output: str) -> None:
    manifest = Manifest("oracle-train", cfg)
    manifest.add_input(data_path)
    data = read_labeled_set(data_path)

    seed = manifest.seeds["oracle"] = cfg.stage_seed("oracle")
    tcfg = cfg.oracle_training
    model, trace = train_oracle(data, cfg.oracle,
            epochs=tcfg.epochs,
            batch_size=tcfg.batch_size,
            lr=tcfg.lr,
            rng_seed=seed,
            validation_fraction=tcfg.validation_fraction,
            augmentation=tcfg.augmentation)
    save_oracle(output, model)
    manifest.write(output)

    if trace and trace[-1].validation is not None:
        val = trace[-1].validation
        logger.info("held-out accuracy %.4f, F1 %.4f", val.accuracy, val.f1)


def run_oracle_score(cfg: RunConfig, oracle_path: str, tractogram_path: str,
        output: str | None, filtered: str | None) -> None:
    manifest = Manifest("oracle-score", cfg)
    model = load_oracle(oracle_path)
    manifest.add_input(oracle_path)
    t = read_tractogram(tractogram_path)
    manifest.add_input(tractogram_path)

    if filtered is not None:
        kept, scores = filter_tractogram(model, t)
        write_tractogram(filtered, kept)
        manifest.write(filtered)
        logger.info("kept %d of %d streamlines", len(kept), len(t))
    else:
        scores = score_batch(model, t.streamlines)

    if output is None:
        write_scores(sys.stdout, scores)
    else:
        write_scores(output, scores)
        manifest.write(output)


def run_agent_train(cfg: RunConfig, phantom: str, oracle_path: str | None,
        output: str) -> None:
    manifest = Manifest("agent-train", cfg)
    manifest.add_input(phantom)
    v = read_phantom(phantom)
    oracle = _oracle_or_none(oracle_path, manifest)
    if oracle is None and (cfg.env.alpha or cfg.env.oracle_stop):
        logger.warning("training without an oracle: the anatomical reward and "
                "oracle stopping are inactive")

    seed = manifest.seeds["agent"] = cfg.stage_seed("agent")
    train_agent(v, oracle, cfg.env, replace(cfg.sac, rng_seed=seed),
            checkpoint_path=output)
    manifest.write(output)


def run_track(cfg: RunConfig, phantom: str, agent_path: str | None,
        oracle_path: str | None, output: str,
        export: str | None = None) -> Tractogram:
    manifest = Manifest("track", cfg)
    manifest.add_input(phantom)
    v = read_phantom(phantom)
    seed = manifest.seeds["track"] = cfg.stage_seed("track")
    tracking = cfg.track.tracking_config(cfg.run.workers)

    if cfg.track.method == "baseline":
        t = track_baseline(v, cfg.track.per_voxel_seeds,
                step_size=cfg.env.step_size, max_angle=cfg.env.max_angle,
                rng_seed=seed, env_cfg=cfg.env, config=tracking)
    else:
        if agent_path is None:
            raise ValueError("tracking with method 'agent' requires --agent")
        manifest.add_input(agent_path)
        agent = load_agent(agent_path)
        oracle = _oracle_or_none(oracle_path, manifest)
        t = track_policy(agent, oracle, v, cfg.track.per_voxel_seeds, cfg.env,
                rng_seed=seed, config=tracking)

    write_tractogram(output, t)
    manifest.write(output)

    if export is not None:
        from tractoracle.interop.nibabel import export_tractogram
        export_tractogram(export, t, v)

    return t


def run_evaluate(cfg: RunConfig, phantom: str, tractogram_path: str,
        output: str | None) -> TractometerReport:
    manifest = Manifest("evaluate", cfg)
    manifest.add_input(phantom)
    manifest.add_input(tractogram_path)
    r = report(read_tractogram(tractogram_path), read_phantom(phantom),
            cfg.evaluation)

    sys.stdout.write(format_report(r))
    if output is not None:
        for path in write_report(output, r):
            manifest.write(path)

    return r


def run_pipeline(cfg: RunConfig, output_dir: str) -> TractometerReport:
    os.makedirs(output_dir, exist_ok=True)

    def path(name: str) -> str:
        return os.path.join(output_dir, name)

    run_phantom_gen(cfg, None, path("phantom.phv"))
    run_oracle_data(cfg, path("phantom.phv"), path("oracle-data.tnsr"))
    run_oracle_train(cfg, path("oracle-data.tnsr"), path("oracle.tnsr"))

    if cfg.track.method == "agent":
        run_agent_train(cfg, path("phantom.phv"), path("oracle.tnsr"),
                path("agent.tnsr"))
        run_track(cfg, path("phantom.phv"), path("agent.tnsr"), path("oracle.tnsr"),
                path("tractogram.tsf"))
    else:
        run_track(cfg, path("phantom.phv"), None, None, path("tractogram.tsf"))

    run_oracle_score(cfg, path("oracle.tnsr"), path("tractogram.tsf"),
            path("scores.txt"), None)
    return run_evaluate(cfg, path("phantom.phv"), path("tractogram.tsf"),
            path("report"))


def run_pipeline_seeds(cfg: RunConfig, output_dir: str, n_seeds: int) -> None:
    """Run the pipeline with the run seeds *seed*, *seed* + 1, ... in
    subdirectories ``seed-<seed>`` of *output_dir* and summarize the
    reports as mean and standard deviation in ``summary.txt`` and
    ``summary.tsv``.
    """
    if n_seeds < 1:
        raise ValueError(f"need at least one seed, got {n_seeds}")

    manifest = Manifest("pipeline", cfg)
    reports = []
    for k in range(n_seeds):
        seed = cfg.run.seed + k
        run_dir = os.path.join(output_dir, f"seed-{seed}")
        logger.info("pipeline run %d of %d (seed %d)", k + 1, n_seeds, seed)
        reports.append(run_pipeline(cfg.with_overrides(seed=seed), run_dir))
        manifest.seeds[f"run-{k}"] = seed
        manifest.add_input(os.path.join(run_dir, "report.txt"))

    summary = summarize_reports(reports)
    sys.stdout.write(format_summary(summary))
    for path in write_summary(os.path.join(output_dir, "summary"), summary):
        manifest.write(path)

# }}}


# {{{ argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
            prog="tractoracle",
            description="Oracle-guided reinforcement-learning tractography on "
            "synthetic phantoms.")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--seed", type=int,
            help="override the run seed of the configuration")
    parser.add_argument("--workers", type=int,
            help="maximum number of tracking threads")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", "-q", action="store_true",
            help="log warnings and errors only")
    verbosity.add_argument("--verbose", "-v", action="store_true",
            help="log debugging output")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom-gen", help="build a phantom volume")
    p.add_argument("--spec", help="demo phantom name or JSON specification file "
            "(default: from configuration)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oracle-data", help="synthesize oracle training data")
    p.add_argument("--phantom", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oracle-train", help="train the oracle")
    p.add_argument("--data", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oracle-score", help="score or filter a tractogram")
    p.add_argument("--oracle", required=True)
    p.add_argument("--tractogram", required=True)
    p.add_argument("-o", "--output",
            help="score file (default: standard output)")
    p.add_argument("--filter", metavar="TRACTOGRAM",
            help="also write the streamlines scoring at or above threshold")

    p = sub.add_parser("agent-train", help="train a tracking agent")
    p.add_argument("--phantom", required=True)
    p.add_argument("--oracle")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("track", help="generate a tractogram")
    p.add_argument("--phantom", required=True)
    p.add_argument("--agent")
    p.add_argument("--oracle")
    p.add_argument("--baseline", action="store_true",
            help="use peak following instead of an agent")
    p.add_argument("--export", metavar="FILE",
            help="also write a .trk or .tck copy (requires nibabel)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("evaluate", help="score a tractogram against ground truth")
    p.add_argument("--phantom", required=True)
    p.add_argument("--tractogram", required=True)
    p.add_argument("-o", "--output", metavar="PREFIX",
            help="write PREFIX.txt and PREFIX.tsv")

    p = sub.add_parser("pipeline", help="run all stages on one phantom")
    p.add_argument("--seeds", type=int, default=1, metavar="N",
            help="repeat with N consecutive run seeds and summarize the reports")
    p.add_argument("-o", "--output-dir", required=True)

    return parser


def _dispatch(args: argparse.Namespace, cfg: RunConfig) -> None:
    commands: dict[str, Callable[[], Any]] = {
        "phantom-gen": lambda: run_phantom_gen(cfg, args.spec, args.output),
        "oracle-data": lambda: run_oracle_data(cfg, args.phantom, args.output),
        "oracle-train": lambda: run_oracle_train(cfg, args.data, args.output),
        "oracle-score": lambda: run_oracle_score(cfg, args.oracle,
            args.tractogram, args.output, args.filter),
        "agent-train": lambda: run_agent_train(cfg, args.phantom, args.oracle,
            args.output),
        "track": lambda: run_track(
            replace(cfg, track=replace(cfg.track, method="baseline"))
            if args.baseline else cfg,
            args.phantom, args.agent, args.oracle, args.output, args.export),
        "evaluate": lambda: run_evaluate(cfg, args.phantom, args.tractogram,
            args.output),
        "pipeline": lambda: (run_pipeline(cfg, args.output_dir) if args.seeds == 1
            else run_pipeline_seeds(cfg, args.output_dir, args.seeds)),
        }
    commands[args.command]()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    elif args.verbose:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
            format="%(levelname)s %(name)s: %(message)s", force=True)

    try:
        cfg = load_config(args.config).with_overrides(
                seed=args.seed, workers=args.workers)
        _dispatch(args, cfg)
    except NumericalFailureError as err:
        logger.error("numerical failure: %s", err)
        return EXIT_NUMERICAL
    except (ValueError, OSError, ImportError, OutOfBoundsError,
            SynthesisError) as err:
        logger.error("%s", err)
        return EXIT_INVALID

    return EXIT_OK

# }}}

# vim: foldmethod=marker

"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 on success, 2 for configuration or missing-input problems,
1 for stage failures. Failures also leave a machine-readable summary in
<run_dir>/errors.json and on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import pipeline
from .config import PipelineConfig
from .errors import ConfigError, DstgenError, MissingInput

log = logging.getLogger(__name__)

STAGES = ("scenarios", "dialogues", "annotate", "describe", "assemble",
          "augment", "stats", "evaluate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dstgen",
        description="Generate, assemble, augment, and evaluate synthetic "
                    "dialogue-state-tracking datasets.",
    )
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--run-dir", help="directory for stage artifacts")
    parser.add_argument("--seed", type=int, help="seed for every stochastic choice")
    parser.add_argument("--workers", type=int, help="parallel units per stage")
    parser.add_argument("--force", action="store_true",
                        help="redo completed units instead of skipping them")
    parser.add_argument("--backend", choices=("mock", "http"))
    parser.add_argument("--fixtures-dir", help="fixture root for the mock backend")
    parser.add_argument("--stage-model", action="append", default=[],
                        metavar="STAGE=TAG", help="model tag override for one stage")
    parser.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("scenarios", help="derive the deduplicated scenario set")
    sub.add_parser("dialogues", help="generate info types and dialogues per scenario")
    sub.add_parser("annotate", help="annotate every turn with a state update")
    sub.add_parser("describe", help="generate slot descriptions per update")
    sub.add_parser("assemble", help="downsample into a training dataset + stats")
    augment = sub.add_parser("augment", help="attach in-context demonstrations")
    augment.add_argument("--manual-demos",
                         help="hand-authored demonstrations file (skips mining)")
    sub.add_parser("stats", help="recompute and print the corpus statistics")
    evaluate = sub.add_parser("evaluate", help="score predictions with per-domain JGA")
    evaluate.add_argument("--golds", required=True, help="benchmark dialogues+states file")
    evaluate.add_argument("--preds", required=True, help="prediction records file")
    evaluate.add_argument("--aliases", help="value-alias JSON file")
    evaluate.add_argument("--output", help="where to write the report (default run dir)")
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config.apply_env(os.environ)
    if args.run_dir is not None:
        config.run_dir = args.run_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    if args.backend is not None:
        config.backend = args.backend
    if args.fixtures_dir is not None:
        config.fixtures_dir = args.fixtures_dir
    for override in args.stage_model:
        if "=" not in override:
            raise ConfigError(f"--stage-model expects STAGE=TAG, got {override!r}")
        stage, tag = override.split("=", 1)
        config.stage_models[stage.strip()] = tag.strip()
    return config.validate()


def _report_failure(config: PipelineConfig | None, command: str, exc: DstgenError) -> None:
    summary = {"stage": command, "error": type(exc).__name__, "message": str(exc)}
    for attr in ("dialogue_id", "turn_index"):
        value = getattr(exc, attr, None)
        if value is not None:
            summary[attr] = value
    print(json.dumps(summary), file=sys.stderr)
    if config is not None:
        try:
            paths = pipeline.RunPaths(config.run_dir)
            if paths.root.exists():
                paths.errors.write_text(json.dumps(summary, indent=2) + "\n",
                                        encoding="utf-8")
        except OSError:
            log.warning("could not write errors.json", exc_info=True)


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config: PipelineConfig | None = None
    try:
        config = load_config(args)
        if args.command == "augment":
            summary = pipeline.run_augment(config, force=args.force,
                                           manual_demos=args.manual_demos)
        elif args.command == "stats":
            summary, report = pipeline.run_stats(config)
            print(report, end="")
        elif args.command == "evaluate":
            summary, report = pipeline.run_evaluate(
                config, args.golds, args.preds,
                aliases_path=args.aliases, output_path=args.output,
            )
            print(report, end="")
        else:
            runner = {
                "scenarios": pipeline.run_scenarios,
                "dialogues": pipeline.run_dialogues,
                "annotate": pipeline.run_annotate,
                "describe": pipeline.run_describe,
                "assemble": pipeline.run_assemble,
            }[args.command]
            summary = runner(config, force=args.force)
    except (ConfigError, MissingInput) as exc:
        _report_failure(config, args.command, exc)
        return 2
    except DstgenError as exc:
        _report_failure(config, args.command, exc)
        return 1
    print(json.dumps(summary))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

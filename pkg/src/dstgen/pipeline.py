"""Stage orchestration: wiring, artifacts, checkpointing, and the manifest.

Every stage reads the previous stage's files from the run directory and
appends its own output per unit of work (a scenario or a dialogue), so an
interrupted run resumes where it stopped; completed units are skipped
unless forced. The manifest records stage versions, unit counts, and file
digests — never timestamps, so seeded runs stay byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

from . import annotation, assembly, descriptions, dialogues, icl, scenarios
from .config import PipelineConfig
from .embedding import Embedder, HashedTokenEmbedder, RemoteEmbedder
from .errors import ConfigError, MissingInput
from .evaluation import (
    evaluate_by_domain,
    per_domain_report,
    read_aliases,
    read_benchmark,
    read_predictions,
)
from .gateway import HttpChatBackend, LlmGateway, ScriptedMockBackend
from .model import Dialogue, Scenario, SlotSpec, StateUpdate, canonical_slot
from .prompts import load_templates

log = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")

STAGE_VERSIONS = {
    "scenarios": 1,
    "dialogues": 1,
    "annotate": 1,
    "describe": 1,
    "assemble": 1,
    "augment": 1,
    "stats": 1,
    "evaluate": 1,
}


class RunPaths:
    def __init__(self, run_dir: str | Path):
        self.root = Path(run_dir)
        self.scenarios = self.root / "scenarios.jsonl"
        self.embeddings = self.root / "embeddings.npz"
        self.info_types = self.root / "info_types.jsonl"
        self.dialogues = self.root / "dialogues.jsonl"
        self.updates = self.root / "updates.jsonl"
        self.questions = self.root / "questions.jsonl"
        self.specs = self.root / "specs.jsonl"
        self.specs_done = self.root / "specs.done"
        self.dataset = self.root / "dataset.jsonl"
        self.dataset_icl = self.root / "dataset_icl.jsonl"
        self.stats = self.root / "stats.tsv"
        self.report = self.root / "report.tsv"
        self.manifest = self.root / "manifest.json"
        self.errors = self.root / "errors.json"

    def ensure(self) -> "RunPaths":
        self.root.mkdir(parents=True, exist_ok=True)
        return self


def build_gateway(config: PipelineConfig, *, environ: Mapping[str, str] | None = None) -> LlmGateway:
    if config.backend == "mock":
        backend = ScriptedMockBackend(config.fixtures_dir)
    else:
        backend = HttpChatBackend(
            config.base_url,
            config.credentials_env,
            environ=environ,
            max_retries=config.max_retries,
            backoff_base=config.backoff_base,
            timeout=config.request_timeout,
        )
    return LlmGateway(
        backend,
        load_templates(),
        default_model=config.model,
        stage_models=config.stage_models,
        temperature_generation=config.temperature_generation,
        temperature_annotation=config.temperature_annotation,
        seed=config.seed,
        max_in_flight=config.max_in_flight,
        tokens_per_minute=config.tokens_per_minute,
    )


def build_embedder(config: PipelineConfig) -> Embedder:
    if config.embedder == "local":
        return HashedTokenEmbedder(dim=config.embedding_dim)
    if not config.embedding_url:
        raise ConfigError("embedding_url is required for the remote embedder")
    return RemoteEmbedder(
        config.embedding_url,
        config.embedding_model,
        credentials_env=config.credentials_env,
    )


# --- small file helpers -------------------------------------------------------

def read_jsonl(path: Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def append_jsonl(path: Path, records: Iterable[dict]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise MissingInput(f"{path} does not exist (expected from: {producer})")
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _update_manifest(paths: RunPaths, stage: str, units: int, files: Sequence[Path]) -> None:
    manifest = {}
    if paths.manifest.exists():
        manifest = json.loads(paths.manifest.read_text(encoding="utf-8"))
    stages = manifest.setdefault("stages", {})
    stages[stage] = {
        "version": STAGE_VERSIONS[stage],
        "units": units,
        "files": {p.name: _sha256(p) for p in files if p.exists()},
    }
    paths.manifest.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _map_units(units: Sequence[T], fn: Callable[[T], U], workers: int) -> Iterator[U]:
    """Run fn over units, yielding results in submission order."""
    if workers <= 1 or len(units) <= 1:
        for unit in units:
            yield fn(unit)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, unit) for unit in units]
        for future in futures:
            yield future.result()


# --- stages ---------------------------------------------------------------------

def run_scenarios(config: PipelineConfig, *, force: bool = False) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    if paths.scenarios.exists() and not force:
        count = sum(1 for _ in read_jsonl(paths.scenarios))
        log.info("scenarios stage already complete (%d scenarios)", count)
        return {"stage": "scenarios", "units": count, "skipped": True}
    deriver = scenarios.ScenarioDeriver(
        build_gateway(config),
        build_embedder(config),
        threshold=config.dedup_threshold,
        min_size=config.min_community_size,
    )
    derived = deriver.derive(k=config.mini_set_size, n=config.final_set_size)
    scenarios.write_scenarios(paths.scenarios, derived)
    scenarios.write_embeddings(paths.embeddings, derived)
    _update_manifest(paths, "scenarios", len(derived), [paths.scenarios, paths.embeddings])
    return {"stage": "scenarios", "units": len(derived)}


def run_dialogues(config: PipelineConfig, *, force: bool = False) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    scenario_list = scenarios.read_scenarios(_require(paths.scenarios, "scenarios"))
    gateway = build_gateway(config)
    wanted = config.dialogues_per_scenario

    done: dict[str, int] = {}
    if paths.dialogues.exists() and not force:
        for record in read_jsonl(paths.dialogues):
            done[record["scenario_id"]] = done.get(record["scenario_id"], 0) + 1
    if force:
        for path in (paths.info_types, paths.dialogues):
            path.unlink(missing_ok=True)

    pending = [s for s in scenario_list if done.get(s.id, 0) < wanted]

    def generate(scenario: Scenario) -> tuple[dict, list[dict]]:
        info = dialogues.generate_info_types(gateway, scenario)
        produced = dialogues.generate_dialogues(
            gateway, scenario, info, wanted, min_turns=config.min_dialogue_turns
        )
        return (
            {"scenario_id": scenario.id, "items": list(info.items)},
            [d.to_record() for d in produced],
        )

    for info_record, dialogue_records in _map_units(pending, generate, config.workers):
        append_jsonl(paths.info_types, [info_record])
        append_jsonl(paths.dialogues, dialogue_records)

    total = sum(1 for _ in read_jsonl(paths.dialogues))
    _update_manifest(paths, "dialogues", total, [paths.info_types, paths.dialogues])
    return {"stage": "dialogues", "units": total, "new": len(pending)}


def _load_dialogues(paths: RunPaths) -> list[Dialogue]:
    return [
        Dialogue.from_record(record)
        for record in read_jsonl(_require(paths.dialogues, "dialogues"))
    ]


def run_annotate(config: PipelineConfig, *, force: bool = False) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    dialogue_list = _load_dialogues(paths)
    gateway = build_gateway(config)

    if force:
        for path in (paths.updates, paths.questions):
            path.unlink(missing_ok=True)
    done: set[str] = set()
    if paths.updates.exists():
        done = {record["dialogue_id"] for record in read_jsonl(paths.updates)}
    pending = [d for d in dialogue_list if d.id not in done]

    def annotate(dialogue: Dialogue) -> tuple[list[dict], list[dict]]:
        annotated = annotation.annotate_dialogue(
            gateway, dialogue, max_pairs=config.max_qa_pairs_per_turn
        )
        update_records = [a.update.to_record(dialogue.id) for a in annotated]
        question_records = [
            {
                "dialogue_id": dialogue.id,
                "turn_index": a.update.turn_index,
                "questions": list(a.questions),
            }
            for a in annotated
        ]
        return update_records, question_records

    for update_records, question_records in _map_units(pending, annotate, config.workers):
        append_jsonl(paths.updates, update_records)
        append_jsonl(paths.questions, question_records)

    total = len({record["dialogue_id"] for record in read_jsonl(paths.updates)})
    _update_manifest(paths, "annotate", total, [paths.updates, paths.questions])
    return {"stage": "annotate", "units": total, "new": len(pending)}


def _load_annotations(paths: RunPaths) -> dict[str, list[tuple[StateUpdate, list[str]]]]:
    """Per-dialogue (update, questions) rows, ordered by turn."""
    updates: dict[str, dict[int, StateUpdate]] = {}
    for record in read_jsonl(_require(paths.updates, "annotate")):
        updates.setdefault(record["dialogue_id"], {})[record["turn_index"]] = (
            StateUpdate.from_record(record)
        )
    questions: dict[tuple[str, int], list[str]] = {}
    for record in read_jsonl(_require(paths.questions, "annotate")):
        questions[(record["dialogue_id"], record["turn_index"])] = record["questions"]
    out: dict[str, list[tuple[StateUpdate, list[str]]]] = {}
    for dialogue_id, by_turn in updates.items():
        rows = []
        for turn_index in sorted(by_turn):
            update = by_turn[turn_index]
            rows.append((update, questions.get((dialogue_id, turn_index), [])))
        out[dialogue_id] = rows
    return out


def run_describe(config: PipelineConfig, *, force: bool = False) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    dialogue_list = _load_dialogues(paths)
    annotations = _load_annotations(paths)
    gateway = build_gateway(config)

    if force:
        for path in (paths.specs, paths.specs_done):
            path.unlink(missing_ok=True)
    done: set[str] = set()
    if paths.specs_done.exists():
        done = set(paths.specs_done.read_text(encoding="utf-8").split())
    pending = [d for d in dialogue_list if d.id in annotations and d.id not in done]

    def describe(dialogue: Dialogue) -> list[dict]:
        records = []
        for update, questions in annotations[dialogue.id]:
            if not update.pairs:
                continue
            specs = descriptions.generate_slot_specs(
                gateway, update, questions, max_examples=config.max_slot_examples
            )
            for spec in specs:
                records.append(
                    {
                        "dialogue_id": dialogue.id,
                        "turn_index": update.turn_index,
                        "slot": spec.slot,
                        "description": spec.description,
                        "examples": list(spec.examples),
                    }
                )
        return records

    for dialogue, records in zip(pending, _map_units(pending, describe, config.workers)):
        append_jsonl(paths.specs, records)
        with open(paths.specs_done, "a", encoding="utf-8") as fh:
            fh.write(dialogue.id + "\n")

    total = len(set(paths.specs_done.read_text(encoding="utf-8").split())) \
        if paths.specs_done.exists() else 0
    _update_manifest(paths, "describe", total, [paths.specs, paths.specs_done])
    return {"stage": "describe", "units": total, "new": len(pending)}


def load_corpus(config: PipelineConfig) -> assembly.Corpus:
    paths = RunPaths(config.run_dir)
    scenario_list = scenarios.read_scenarios(_require(paths.scenarios, "scenarios"))
    dialogue_list = _load_dialogues(paths)
    annotations = _load_annotations(paths)
    specs: dict[tuple[str, int, str], SlotSpec] = {}
    if paths.specs.exists():
        for record in read_jsonl(paths.specs):
            key = (record["dialogue_id"], record["turn_index"], canonical_slot(record["slot"]))
            specs[key] = SlotSpec(
                slot=record["slot"],
                description=record["description"],
                examples=tuple(record["examples"]),
            )
    return assembly.Corpus(
        scenarios=tuple(scenario_list),
        dialogues=tuple(dialogue_list),
        updates={
            dialogue_id: tuple(update for update, _ in rows)
            for dialogue_id, rows in annotations.items()
        },
        specs=specs,
    )


def run_assemble(config: PipelineConfig, *, force: bool = False) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    corpus = load_corpus(config)
    _require(paths.specs, "describe")
    plan = assembly.SamplingPlan.for_filled_count(corpus.filled_update_count(), config.seed)
    examples = assembly.downsample(corpus, plan)
    assembly.write_dataset(examples, paths.dataset)
    stats = assembly.compute_stats(corpus)
    paths.stats.write_text(stats.as_report(), encoding="utf-8")
    _update_manifest(paths, "assemble", len(examples), [paths.dataset, paths.stats])
    return {
        "stage": "assemble",
        "units": len(examples),
        "filled": plan.n,
        "empty": plan.m,
    }


def run_augment(config: PipelineConfig, *, force: bool = False,
                manual_demos: str | None = None) -> dict:
    paths = RunPaths(config.run_dir).ensure()
    examples = assembly.read_dataset(_require(paths.dataset, "assemble"))
    if manual_demos:
        by_slot = icl.read_manual_demonstrations(manual_demos)
        augmented = icl.apply_manual_demonstrations(
            examples, by_slot, config.max_demonstrations
        )
    else:
        corpus = load_corpus(config)
        augmented = icl.augment_dataset(
            examples,
            corpus,
            build_embedder(config),
            min_cluster_size=config.min_cluster_size,
            max_k=config.max_demonstrations,
            seed=config.seed,
        )
    assembly.write_dataset(augmented, paths.dataset_icl)
    with_demos = sum(1 for e in augmented if e.demos)
    _update_manifest(paths, "augment", len(augmented), [paths.dataset_icl])
    return {"stage": "augment", "units": len(augmented), "with_demos": with_demos}


def run_stats(config: PipelineConfig) -> tuple[dict, str]:
    paths = RunPaths(config.run_dir).ensure()
    corpus = load_corpus(config)
    stats = assembly.compute_stats(corpus)
    report = stats.as_report()
    paths.stats.write_text(report, encoding="utf-8")
    _update_manifest(paths, "stats", corpus.filled_update_count(), [paths.stats])
    return {"stage": "stats", "units": len(corpus.dialogues)}, report


def run_evaluate(config: PipelineConfig, golds_path: str, preds_path: str, *,
                 aliases_path: str | None = None,
                 output_path: str | None = None) -> tuple[dict, str]:
    paths = RunPaths(config.run_dir).ensure()
    corpus = read_benchmark(_require(Path(golds_path), "external gold file"))
    preds = read_predictions(_require(Path(preds_path), "external prediction file"))
    aliases = read_aliases(aliases_path) if aliases_path else None
    results = evaluate_by_domain(corpus, preds, aliases=aliases)
    report = per_domain_report(results)
    text = report.to_tsv()
    target = Path(output_path) if output_path else paths.report
    target.write_text(text, encoding="utf-8")
    _update_manifest(paths, "evaluate", len(results), [target])
    return {"stage": "evaluate", "units": len(results), "average": report.average}, text

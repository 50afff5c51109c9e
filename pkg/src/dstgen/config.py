"""Pipeline configuration.

Configs live in a flat, commented ``key = value`` file. Environment
variables override file values using the ``DSTGEN_`` prefix (for example
``DSTGEN_SEED=7``); per-stage model tags use dotted keys such as
``model.qa_pairs`` (env: ``DSTGEN_MODEL_QA_PAIRS``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .prompts import TEMPLATE_IDS

_HEADER = "# dstgen pipeline configuration (key = value; '#' starts a comment)\n"


@dataclass
class PipelineConfig:
    # backend
    backend: str = "mock"                    # mock | http
    fixtures_dir: str = "fixtures"
    base_url: str = "https://api.openai.com/v1"
    credentials_env: str = "DSTGEN_API_KEY"
    model: str = "gpt-3.5-turbo-0301"
    stage_models: dict[str, str] = field(default_factory=dict)
    temperature_generation: float = 1.0
    temperature_annotation: float = 0.0
    max_retries: int = 4
    backoff_base: float = 0.25
    request_timeout: float = 60.0
    max_in_flight: int = 4
    tokens_per_minute: int = 0               # 0 = unlimited

    # scenario derivation
    mini_set_size: int = 100                 # k
    final_set_size: int = 1000               # n
    dedup_threshold: float = 0.75
    min_community_size: int = 1

    # dialogue generation
    dialogues_per_scenario: int = 5
    min_dialogue_turns: int = 6

    # annotation / description
    max_qa_pairs_per_turn: int = 16
    max_slot_examples: int = 6

    # embeddings
    embedder: str = "local"                  # local | remote
    embedding_dim: int = 256
    embedding_url: str = ""
    embedding_model: str = ""

    # assembly / augmentation
    min_cluster_size: int = 5
    max_demonstrations: int = 3

    # run
    seed: int = 0
    workers: int = 1
    run_dir: str = "run"

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.backend in ("mock", "http"), "backend must be 'mock' or 'http'"),
            (self.embedder in ("local", "remote"), "embedder must be 'local' or 'remote'"),
            (self.mini_set_size >= 1, "mini_set_size must be >= 1"),
            (self.final_set_size >= 1, "final_set_size must be >= 1"),
            (-1.0 <= self.dedup_threshold <= 1.0, "dedup_threshold must be in [-1, 1]"),
            (self.min_community_size >= 1, "min_community_size must be >= 1"),
            (self.dialogues_per_scenario >= 1, "dialogues_per_scenario must be >= 1"),
            (self.min_dialogue_turns >= 2, "min_dialogue_turns must be >= 2"),
            (self.max_qa_pairs_per_turn >= 1, "max_qa_pairs_per_turn must be >= 1"),
            (self.max_slot_examples >= 0, "max_slot_examples must be >= 0"),
            (self.embedding_dim >= 2, "embedding_dim must be >= 2"),
            (self.min_cluster_size >= 2, "min_cluster_size must be >= 2"),
            (self.max_demonstrations >= 0, "max_demonstrations must be >= 0"),
            (self.temperature_generation >= 0, "temperature_generation must be >= 0"),
            (self.temperature_annotation >= 0, "temperature_annotation must be >= 0"),
            (self.max_retries >= 0, "max_retries must be >= 0"),
            (self.backoff_base >= 0, "backoff_base must be >= 0"),
            (self.request_timeout > 0, "request_timeout must be > 0"),
            (self.max_in_flight >= 1, "max_in_flight must be >= 1"),
            (self.tokens_per_minute >= 0, "tokens_per_minute must be >= 0"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for stage in self.stage_models:
            if stage not in TEMPLATE_IDS:
                raise ConfigError(f"unknown stage {stage!r} in stage_models")
        return self

    # --- file format -----------------------------------------------------------

    def to_file(self, path: str | Path) -> None:
        lines = [_HEADER]
        for f in dataclasses.fields(self):
            if f.name == "stage_models":
                continue
            lines.append(f"{f.name} = {getattr(self, f.name)}\n")
        for stage, tag in sorted(self.stage_models.items()):
            lines.append(f"model.{stage} = {tag}\n")
        Path(path).write_text("".join(lines), encoding="utf-8")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        values: dict[str, str] = {}
        stage_models: dict[str, str] = {}
        for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("model."):
                stage_models[key[len("model."):]] = value
            else:
                values[key] = value
        config = cls(stage_models=stage_models)
        _apply(config, values, origin=str(path))
        return config.validate()

    def apply_env(self, environ: Mapping[str, str]) -> "PipelineConfig":
        values: dict[str, str] = {}
        for key, value in environ.items():
            if not key.startswith("DSTGEN_"):
                continue
            name = key[len("DSTGEN_"):].lower()
            if name.startswith("model_") and name[len("model_"):] in TEMPLATE_IDS:
                self.stage_models[name[len("model_"):]] = value
            elif name in _FIELD_TYPES:
                values[name] = value
        _apply(self, values, origin="environment")
        return self.validate()


_FIELD_TYPES = {
    f.name: f.type for f in dataclasses.fields(PipelineConfig)
    if f.name != "stage_models"
}


def _apply(config: PipelineConfig, values: Mapping[str, str], *, origin: str) -> None:
    for key, raw in values.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{origin}: unknown config key {key!r}")
        current = getattr(config, key)
        try:
            if isinstance(current, bool):
                parsed = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                parsed = int(raw)
            elif isinstance(current, float):
                parsed = float(raw)
            else:
                parsed = raw
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {key!r}: {raw!r}") from exc
        setattr(config, key, parsed)

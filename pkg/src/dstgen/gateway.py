"""Chat-completion backends and the gateway that feeds them.

Two backends: an OpenAI-compatible HTTP endpoint and a scripted mock that
replays fixture files. Fixtures are keyed by a stable digest of
(template id, sorted bindings) so they survive prompt-order refactors; a
key may also map to a numbered sequence of files, replayed in call order,
to emulate repeated sampling at temperature > 0.

The gateway owns per-stage model tags and temperatures, the in-flight
limit, the per-minute token budget, and the one parse-feedback retry.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, TypeVar

import requests

from .errors import (
    BackendRefusal,
    FixtureMissing,
    ParseError,
    TransportError,
)
from .prompts import FORMAT_REMINDERS, PromptTemplate

log = logging.getLogger(__name__)

T = TypeVar("T")

# Stages that want diversity run hot; annotation/translation run cold.
GENERATION_TEMPLATES = frozenset({"scenarios", "info_types", "dialogue"})

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model_tag: str
    temperature: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


def binding_digest(template_id: str, bindings: Mapping[str, str]) -> str:
    """Stable fixture key: digest of the template id and sorted bindings."""
    h = hashlib.sha256()
    h.update(template_id.encode("utf-8"))
    for key in sorted(bindings):
        h.update(b"\x1e")
        h.update(str(key).encode("utf-8"))
        h.update(b"\x1f")
        h.update(str(bindings[key]).encode("utf-8"))
    return h.hexdigest()[:16]


class ScriptedMockBackend:
    """Replays fixture files: ``<root>/<template_id>/<digest>.txt``.

    A plain ``<digest>.txt`` answers every call for that key. Alternatively,
    ``<digest>.1.txt``, ``<digest>.2.txt``, ... are replayed in call order,
    with the last file reused once the sequence is exhausted.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest, *, template_id: str = "",
                 bindings: Mapping[str, str] | None = None) -> str:
        if not template_id or bindings is None:
            raise FixtureMissing("the scripted mock needs a template id and bindings")
        digest = binding_digest(template_id, bindings)
        directory = self.root / template_id
        single = directory / f"{digest}.txt"
        if single.exists():
            return single.read_text(encoding="utf-8")
        with self._lock:
            call = self._counts.get(digest, 0) + 1
            self._counts[digest] = call
        sequence = sorted(
            directory.glob(f"{digest}.*.txt"),
            key=lambda p: int(p.name.split(".")[-2]),
        )
        if sequence:
            return sequence[min(call, len(sequence)) - 1].read_text(encoding="utf-8")
        raise FixtureMissing(
            f"no fixture for template {template_id!r} digest {digest} under {directory}"
        )


def write_fixture(root: str | Path, template_id: str, bindings: Mapping[str, str],
                  text: str, *, call_index: int | None = None) -> Path:
    """Author a mock fixture for the given bindings; returns the file path."""
    digest = binding_digest(template_id, bindings)
    directory = Path(root) / template_id
    directory.mkdir(parents=True, exist_ok=True)
    name = f"{digest}.txt" if call_index is None else f"{digest}.{call_index}.txt"
    path = directory / name
    path.write_text(text, encoding="utf-8")
    return path


class HttpChatBackend:
    """OpenAI-compatible chat endpoint: role-tagged messages in, text out.

    Transient failures (connection errors, 429, 5xx) retry with exponential
    backoff up to ``max_retries``; other non-2xx responses raise
    BackendRefusal immediately.
    """

    def __init__(self, base_url: str, credentials_env: str | None = None, *,
                 environ: Mapping[str, str] | None = None,
                 max_retries: int = 4, backoff_base: float = 0.25,
                 timeout: float = 60.0, session=None,
                 sleep: Callable[[float], None] = time.sleep):
        import os

        self.url = base_url.rstrip("/") + "/chat/completions"
        env = environ if environ is not None else os.environ
        self.api_key = env.get(credentials_env, "") if credentials_env else ""
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.session = session if session is not None else requests.Session()
        self.sleep = sleep

    def complete(self, request: CompletionRequest, *, template_id: str = "",
                 bindings: Mapping[str, str] | None = None) -> str:
        payload: dict = {
            "model": request.model_tag,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_failure = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self.sleep(self.backoff_base * 2 ** (attempt - 1))
            try:
                response = self.session.post(
                    self.url, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_failure = f"transport failure: {exc}"
                log.warning("completion attempt %d failed: %s", attempt + 1, exc)
                continue
            status = response.status_code
            if 200 <= status < 300:
                try:
                    return response.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise BackendRefusal(f"malformed completion body: {exc}") from exc
            if status in RETRYABLE_STATUS:
                last_failure = f"HTTP {status}"
                log.warning("completion attempt %d got HTTP %d", attempt + 1, status)
                continue
            raise BackendRefusal(f"HTTP {status}: {response.text[:200]}")
        raise TransportError(
            f"completion failed after {self.max_retries + 1} attempts ({last_failure})"
        )


def estimate_tokens(text: str) -> int:
    return max(1, len(text) // 4)


class TokenBudget:
    """Sliding one-minute token budget; callers block until room frees up."""

    def __init__(self, tokens_per_minute: int, *,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.budget = tokens_per_minute
        self.clock = clock
        self.sleep = sleep
        self._window: deque[tuple[float, int]] = deque()
        self._lock = threading.Lock()

    def acquire(self, tokens: int) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._window and self._window[0][0] <= now - 60.0:
                    self._window.popleft()
                used = sum(t for _, t in self._window)
                if used + tokens <= self.budget or not self._window:
                    self._window.append((now, tokens))
                    return
                wait = self._window[0][0] + 60.0 - now
            self.sleep(max(wait, 0.01))


class LlmGateway:
    """Renders templates, routes completions, and retries unparseable output.

    Thread-safe: concurrent calls are capped by an in-flight semaphore and,
    optionally, a per-minute token budget.
    """

    def __init__(self, backend, templates: Mapping[str, PromptTemplate], *,
                 default_model: str = "scripted",
                 stage_models: Mapping[str, str] | None = None,
                 temperature_generation: float = 1.0,
                 temperature_annotation: float = 0.0,
                 seed: int | None = None,
                 max_in_flight: int = 4,
                 tokens_per_minute: int = 0):
        self.backend = backend
        self.templates = dict(templates)
        self.default_model = default_model
        self.stage_models = dict(stage_models or {})
        self.temperature_generation = temperature_generation
        self.temperature_annotation = temperature_annotation
        self.seed = seed
        self._in_flight = threading.BoundedSemaphore(max_in_flight)
        self._budget = TokenBudget(tokens_per_minute) if tokens_per_minute else None

    def model_for(self, template_id: str) -> str:
        return self.stage_models.get(template_id, self.default_model)

    def temperature_for(self, template_id: str) -> float:
        if template_id in GENERATION_TEMPLATES:
            return self.temperature_generation
        return self.temperature_annotation

    def complete_template(self, template_id: str, bindings: Mapping[str, str], *,
                          with_reminder: bool = False) -> str:
        template = self.templates[template_id]
        prompt = template.render(bindings)
        key_bindings = dict(bindings)
        if with_reminder:
            reminder = FORMAT_REMINDERS[template_id]
            prompt = f"{prompt}\n\n{reminder}"
            key_bindings["format_reminder"] = reminder
        request = CompletionRequest(
            prompt=prompt,
            model_tag=self.model_for(template_id),
            temperature=self.temperature_for(template_id),
            seed=self.seed,
        )
        if self._budget is not None:
            self._budget.acquire(estimate_tokens(prompt))
        with self._in_flight:
            return self.backend.complete(
                request, template_id=template_id, bindings=key_bindings
            )

    def complete_parsed(self, template_id: str, bindings: Mapping[str, str],
                        parser: Callable[[str], T]) -> T:
        """Complete and parse, retrying once with the format reminder appended."""
        text = self.complete_template(template_id, bindings)
        try:
            return parser(text)
        except ParseError as exc:
            log.info("retrying %s after parse failure: %s", template_id, exc)
            text = self.complete_template(template_id, bindings, with_reminder=True)
            return parser(text)

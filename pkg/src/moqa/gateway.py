"""Uniform access to chat and embedding backends.

One wire dialect (chat-completion JSON over HTTP), an in-process mock
transport for tests, a content-addressed response cache, and replay mode
that serves only from the cache. Counters track calls per pipeline stage.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import requests

from .errors import BackendRefusalError, ReplayMissError, TransportError

STAGES = ("vqa", "textual_qa", "table_qa", "direct_qa", "fusion", "reextract")


class BackendKind(str, Enum):
    CHAT = "chat"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class BackendParams:
    temperature: float = 0.0
    max_tokens: int = 256
    timeout_s: float = 30.0
    max_retries: int = 3

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class BackendSpec:
    backend_id: str
    kind: BackendKind
    endpoint: str
    model_name: str
    params: BackendParams = field(default_factory=BackendParams)

    def __post_init__(self):
        if not self.backend_id:
            raise ValueError("backend_id must be non-empty")


@dataclass(frozen=True)
class ChatExchange:
    fingerprint: str
    response_text: str
    latency_ms: int
    from_cache: bool


def api_key_env_var(backend_id: str) -> str:
    return "MOQA_API_KEY_" + re.sub(r"[^A-Za-z0-9]", "_", backend_id).upper()


def compute_fingerprint(
    backend: BackendSpec,
    op: str,
    text: str,
    image_uri: Optional[str] = None,
) -> str:
    """Content hash identifying one request; the cache and replay key."""
    doc = {
        "op": op,
        "backend_id": backend.backend_id,
        "model_name": backend.model_name,
        "prompt": text,
        "temperature": backend.params.temperature,
        "max_tokens": backend.params.max_tokens,
    }
    if image_uri is not None:
        doc["image_uri"] = image_uri
    blob = json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class CallCounters:
    """Per-stage call counts, split by cache hit/miss."""

    cached: dict = field(default_factory=lambda: {s: 0 for s in STAGES})
    uncached: dict = field(default_factory=lambda: {s: 0 for s in STAGES})

    def total(self, stage: str) -> int:
        return self.cached[stage] + self.uncached[stage]

    def grand_total(self) -> int:
        return sum(self.total(s) for s in STAGES)

    @property
    def vqa_calls(self) -> int:
        return self.total("vqa")

    @property
    def textual_qa_calls(self) -> int:
        return self.total("textual_qa")

    @property
    def table_qa_calls(self) -> int:
        return self.total("table_qa")

    @property
    def direct_qa_calls(self) -> int:
        return self.total("direct_qa")

    @property
    def fusion_calls(self) -> int:
        return self.total("fusion")

    @property
    def reextract_calls(self) -> int:
        return self.total("reextract")

    def as_dict(self) -> dict:
        return {
            "cached": dict(self.cached),
            "uncached": dict(self.uncached),
            "total": {s: self.total(s) for s in STAGES},
        }


class ResponseCache:
    """Append-only JSONL log of {fingerprint, response} entries.

    In read-only (replay) mode a missing fingerprint raises ReplayMissError
    instead of falling through to a backend.
    """

    def __init__(self, path=None, read_only: bool = False):
        self.read_only = read_only
        self._path = Path(path) if path is not None else None
        self._entries = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            with self._path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    self._entries[record["fingerprint"]] = record["response"]

    def __len__(self):
        return len(self._entries)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._entries

    def get(self, fingerprint: str):
        return self._entries.get(fingerprint)

    def put(self, fingerprint: str, response) -> None:
        if self.read_only:
            raise RuntimeError("cache is read-only (replay mode)")
        with self._lock:
            if fingerprint in self._entries:
                return
            self._entries[fingerprint] = response
            if self._path is not None:
                line = json.dumps(
                    {"fingerprint": fingerprint, "response": response},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    def import_entries(self, transcript_path) -> int:
        """Merge a transcript file (same JSONL schema); returns entries added."""
        added = 0
        with Path(transcript_path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record["fingerprint"] not in self._entries:
                    self.put(record["fingerprint"], record["response"])
                    added += 1
        return added


class HttpTransport:
    """Chat-completion JSON over HTTP; embeddings via the same endpoint style."""

    def chat(self, backend: BackendSpec, prompt: str, image_uri=None) -> str:
        if image_uri is None:
            content = prompt
        else:
            content = [
                {"type": "text", "text": prompt},
                {"type": "image_url", "image_url": {"url": image_uri}},
            ]
        payload = {
            "model": backend.model_name,
            "messages": [{"role": "user", "content": content}],
            "temperature": backend.params.temperature,
            "max_tokens": backend.params.max_tokens,
        }
        data = self._post(backend, payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response: {exc}") from exc

    def embed(self, backend: BackendSpec, text: str) -> list:
        payload = {"model": backend.model_name, "input": text}
        data = self._post(backend, payload)
        try:
            return list(data["data"][0]["embedding"])
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed embedding response: {exc}") from exc

    def _post(self, backend: BackendSpec, payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(api_key_env_var(backend.backend_id))
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = requests.post(
                backend.endpoint,
                json=payload,
                headers=headers,
                timeout=backend.params.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if not 200 <= response.status_code < 300:
            raise BackendRefusalError(response.status_code, response.text)
        try:
            return response.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response body: {exc}") from exc


def hash_basis_vector(text: str, dim: int) -> list:
    """Deterministic unit basis vector selected by content hash."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    index = int.from_bytes(digest[:8], "big") % dim
    vector = [0.0] * dim
    vector[index] = 1.0
    return vector


class MockTransport:
    """In-process transport for tests.

    Chat responses come from a script dict keyed by prompt (or by
    (prompt, image_uri) when the image matters), a fallback responder
    callable, or a default string. Embeddings are hash basis vectors.
    ``fail_first`` injects that many TransportErrors before succeeding.
    """

    def __init__(
        self,
        script: Optional[dict] = None,
        responder: Optional[Callable] = None,
        default: Optional[str] = None,
        embed_dim: int = 8,
        fail_first: int = 0,
    ):
        self.script = dict(script or {})
        self.responder = responder
        self.default = default
        self.embed_dim = embed_dim
        self._failures_left = fail_first
        self._lock = threading.Lock()
        self.chat_requests = []

    def _maybe_fail(self):
        with self._lock:
            if self._failures_left > 0:
                self._failures_left -= 1
                raise TransportError("injected transport failure")

    def chat(self, backend: BackendSpec, prompt: str, image_uri=None) -> str:
        self._maybe_fail()
        with self._lock:
            self.chat_requests.append((prompt, image_uri))
        if (prompt, image_uri) in self.script:
            return self.script[(prompt, image_uri)]
        if prompt in self.script:
            return self.script[prompt]
        if self.responder is not None:
            result = self.responder(prompt, image_uri)
            if result is not None:
                return result
        if self.default is not None:
            return self.default
        raise TransportError(f"no scripted response for prompt: {prompt!r}")

    def embed(self, backend: BackendSpec, text: str) -> list:
        self._maybe_fail()
        return hash_basis_vector(text, self.embed_dim)


class ModelGateway:
    """Shared entry point for all model calls in a run.

    Thread-safe: counter updates and cache appends are serialized, and a
    semaphore bounds in-flight transport requests.
    """

    def __init__(
        self,
        cache_path=None,
        replay: bool = False,
        transport=None,
        max_in_flight: int = 4,
        backoff_base_s: float = 0.5,
        sleeper: Callable = time.sleep,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.cache = ResponseCache(cache_path, read_only=replay)
        self.replay = replay
        self._default_transport = transport if transport is not None else HttpTransport()
        self._transports = {}
        self._semaphore = threading.BoundedSemaphore(max_in_flight)
        self._backoff_base_s = backoff_base_s
        self._sleep = sleeper
        self._counter_lock = threading.Lock()
        self._counters = CallCounters()

    def register_transport(self, backend_id: str, transport) -> None:
        self._transports[backend_id] = transport

    def _transport_for(self, backend: BackendSpec):
        return self._transports.get(backend.backend_id, self._default_transport)

    def _bump(self, stage: str, cached: bool) -> None:
        with self._counter_lock:
            bucket = self._counters.cached if cached else self._counters.uncached
            bucket[stage] += 1

    def _with_retries(self, backend: BackendSpec, call: Callable):
        attempts = backend.params.max_retries + 1
        delay = self._backoff_base_s
        for attempt in range(attempts):
            try:
                with self._semaphore:
                    return call()
            except TransportError:
                if attempt == attempts - 1:
                    raise
                if delay > 0:
                    self._sleep(delay)
                delay *= 2

    def chat(
        self,
        backend: BackendSpec,
        prompt: str,
        stage: str,
        image_uri: Optional[str] = None,
    ) -> ChatExchange:
        if backend.kind is not BackendKind.CHAT:
            raise ValueError(f"backend {backend.backend_id!r} is not a chat backend")
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        fingerprint = compute_fingerprint(backend, "chat", prompt, image_uri)
        hit = self.cache.get(fingerprint)
        if hit is not None:
            self._bump(stage, cached=True)
            return ChatExchange(fingerprint, hit, 0, True)
        if self.cache.read_only:
            raise ReplayMissError(fingerprint)
        self._bump(stage, cached=False)
        transport = self._transport_for(backend)
        start = time.monotonic()
        text = self._with_retries(
            backend, lambda: transport.chat(backend, prompt, image_uri)
        )
        latency_ms = int((time.monotonic() - start) * 1000)
        self.cache.put(fingerprint, text)
        return ChatExchange(fingerprint, text, latency_ms, False)

    def embed(self, backend: BackendSpec, text: str) -> list:
        if backend.kind is not BackendKind.EMBEDDING:
            raise ValueError(
                f"backend {backend.backend_id!r} is not an embedding backend"
            )
        if not text:
            raise ValueError("cannot embed empty text")
        fingerprint = compute_fingerprint(backend, "embed", text)
        hit = self.cache.get(fingerprint)
        if hit is not None:
            return list(hit)
        if self.cache.read_only:
            raise ReplayMissError(fingerprint)
        transport = self._transport_for(backend)
        vector = self._with_retries(backend, lambda: transport.embed(backend, text))
        vector = [float(v) for v in vector]
        self.cache.put(fingerprint, vector)
        return vector

    def call_stats(self) -> CallCounters:
        with self._counter_lock:
            return CallCounters(
                cached=dict(self._counters.cached),
                uncached=dict(self._counters.uncached),
            )

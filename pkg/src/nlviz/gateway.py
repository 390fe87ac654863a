"""Provider gateway: live HTTP submission and deterministic record/replay.

Every request is canonicalized and hashed over mode, model name, params,
and payload bytes; the hash keys the cassette store, so any change to the
prompt template invalidates stale recordings instead of silently replaying
them. Live calls are paced by a token bucket and retried with exponential
backoff on transient failures.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from .errors import (
    AuthError,
    CassetteMiss,
    ProviderError,
    ProviderTimeout,
    RateLimited,
)
from .prompts import ProviderRequest

DEFAULT_STOP = ("plt.show()",)


@dataclass(frozen=True)
class ModelSpec:
    provider_id: str
    model_name: str
    mode: str  # completion | chat

    def __post_init__(self) -> None:
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.mode not in ("completion", "chat"):
            raise ValueError(f"unknown mode {self.mode!r}")


# Well-known chat-only model prefixes for shorthand CLI specs.
_CHAT_NAME_HINTS = ("gpt-3.5", "gpt-4", "turbo", "chat")


def parse_model_spec(text: str) -> ModelSpec:
    """Parse 'provider:name:mode', 'name:mode', or a bare model name."""
    parts = text.split(":")
    if len(parts) == 3:
        return ModelSpec(provider_id=parts[0], model_name=parts[1], mode=parts[2])
    if len(parts) == 2:
        return ModelSpec(provider_id="openai", model_name=parts[0], mode=parts[1])
    name = parts[0]
    mode = "chat" if any(h in name.lower() for h in _CHAT_NAME_HINTS) else "completion"
    return ModelSpec(provider_id="openai", model_name=name, mode=mode)


@dataclass(frozen=True)
class ModelParams:
    temperature: float = 0.0
    max_tokens: int = 500
    stop: tuple[str, ...] = DEFAULT_STOP

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str  # stop | length | error
    provider_meta: dict = field(default_factory=dict)


def payload_bytes(request: ProviderRequest) -> bytes:
    if request.mode == "completion":
        return (request.prompt_text or "").encode("utf-8")
    messages = [{"role": m.role, "content": m.content} for m in request.messages]
    return json.dumps(messages, ensure_ascii=False, sort_keys=True).encode("utf-8")


def request_hash(request: ProviderRequest, spec: ModelSpec) -> str:
    params = request.params or ModelParams()
    canon = {
        "mode": request.mode,
        "model_name": spec.model_name,
        "params": {
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop),
        },
        "payload_b64": base64.b64encode(payload_bytes(request)).decode("ascii"),
    }
    blob = json.dumps(canon, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def strip_stop_suffix(text: str, stop: tuple[str, ...]) -> str:
    for marker in stop:
        idx = text.find(marker)
        if idx != -1:
            return text[:idx]
    return text


class RateLimiter:
    """Token bucket; default 20 requests per minute."""

    def __init__(self, rate_per_min: float = 20.0, burst: int | None = None) -> None:
        self.rate = rate_per_min / 60.0
        self.capacity = float(burst if burst is not None else max(1, int(rate_per_min)))
        self._tokens = self.capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


class CassetteStore:
    """One record per file, named by request hash; reads are lock-free,
    writes are serialized."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self._write_lock = threading.Lock()

    def path_for(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def load(self, digest: str) -> dict | None:
        path = self.path_for(digest)
        if not path.is_file():
            return None
        return json.loads(path.read_text("utf-8"))

    def save(self, digest: str, record: dict) -> None:
        with self._write_lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            path = self.path_for(digest)
            path.write_text(json.dumps(record, ensure_ascii=False, indent=2, sort_keys=True),
                            encoding="utf-8")

    def record_for(self, request: ProviderRequest, spec: ModelSpec,
                   completion: Completion) -> dict:
        params = request.params or ModelParams()
        return {
            "request_hash": request_hash(request, spec),
            "model_name": spec.model_name,
            "mode": request.mode,
            "params": {
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
                "stop": list(params.stop),
            },
            "prompt_bytes": base64.b64encode(payload_bytes(request)).decode("ascii"),
            "completion_text": completion.text,
            "finish_reason": completion.finish_reason,
            "recorded_at": datetime.now(timezone.utc).isoformat(),
        }


class Provider:
    """Interface: turn one shaped request into one completion."""

    def submit(self, request: ProviderRequest, spec: ModelSpec) -> Completion:
        raise NotImplementedError


class HttpProvider(Provider):
    """Completion- and chat-style HTTP endpoints with retry and pacing."""

    def __init__(
        self,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        max_attempts: int = 3,
        timeout_s: float = 60.0,
        rate_limiter: RateLimiter | None = None,
        session: requests.Session | None = None,
        backoff_base_s: float = 1.0,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.max_attempts = max_attempts
        self.timeout_s = timeout_s
        self.rate_limiter = rate_limiter or RateLimiter()
        self.session = session or requests.Session()
        self.backoff_base_s = backoff_base_s

    def _api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise AuthError(f"no API key in environment variable {self.api_key_env}")
        return key

    def _body(self, request: ProviderRequest, spec: ModelSpec) -> tuple[str, dict]:
        params = request.params or ModelParams()
        common = {
            "model": spec.model_name,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop),
        }
        if request.mode == "completion":
            return f"{self.base_url}/completions", {
                **common, "prompt": request.prompt_text or "",
            }
        return f"{self.base_url}/chat/completions", {
            **common,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        }

    def submit(self, request: ProviderRequest, spec: ModelSpec) -> Completion:
        url, body = self._body(request, spec)
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        last_exc: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            self.rate_limiter.acquire()
            try:
                resp = self.session.post(url, json=body, headers=headers,
                                         timeout=self.timeout_s)
            except requests.Timeout as exc:
                last_exc = ProviderTimeout(str(exc))
                continue
            except requests.RequestException as exc:
                last_exc = ProviderError(str(exc))
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"provider rejected credentials ({resp.status_code})")
            if resp.status_code == 429:
                last_exc = RateLimited("provider rate limit")
                continue
            if resp.status_code >= 500:
                last_exc = ProviderError(f"provider error {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProviderError(f"unexpected status {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp.json(), request)
        raise last_exc if last_exc else ProviderError("no attempts made")

    def _parse(self, data: dict, request: ProviderRequest) -> Completion:
        try:
            choice = data["choices"][0]
            if request.mode == "completion":
                text = choice["text"]
            else:
                text = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc
        params = request.params or ModelParams()
        return Completion(
            text=strip_stop_suffix(text, params.stop),
            finish_reason=finish if finish in ("stop", "length") else "error",
            provider_meta={k: v for k, v in data.items() if k != "choices"},
        )


class ReplayProvider(Provider):
    """Deterministic playback; strict mode aborts on a miss, lenient mode
    records from a live fallback and then replays."""

    def __init__(self, store: CassetteStore, fallback: Provider | None = None) -> None:
        self.store = store
        self.fallback = fallback

    def submit(self, request: ProviderRequest, spec: ModelSpec) -> Completion:
        digest = request_hash(request, spec)
        record = self.store.load(digest)
        if record is None:
            if self.fallback is None:
                raise CassetteMiss(f"no cassette for request {digest[:12]}…")
            completion = self.fallback.submit(request, spec)
            self.store.save(digest, self.store.record_for(request, spec, completion))
            return completion
        return Completion(
            text=record["completion_text"],
            finish_reason=record["finish_reason"],
            provider_meta={"request_hash": digest, "replayed": True},
        )


class RecordingProvider(Provider):
    """Pass-through that persists every (request hash -> completion) pair."""

    def __init__(self, inner: Provider, store: CassetteStore) -> None:
        self.inner = inner
        self.store = store

    def submit(self, request: ProviderRequest, spec: ModelSpec) -> Completion:
        completion = self.inner.submit(request, spec)
        digest = request_hash(request, spec)
        self.store.save(digest, self.store.record_for(request, spec, completion))
        return completion

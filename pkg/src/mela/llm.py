"""Chat backends: live HTTP endpoint, recording wrapper, deterministic replay.

Every chat produces a Transcript that is persisted before the reply is
consumed (write-ahead), making any recorded run replayable offline. Replay
keys on a digest of the full request rather than call order; repeated
identical requests replay their recorded replies first-in-first-out.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Protocol

CASSETTE_VERSION = 1

ENV_BASE_URL = "MELA_LLM_BASE_URL"
ENV_API_KEY = "MELA_LLM_API_KEY"

STAGE_TAGS = ("analysis", "generation", "error_repair", "metacognition")


class GatewayError(RuntimeError):
    pass


class ReplayMiss(GatewayError):
    def __init__(self, stage_tag: str, digest: str):
        self.stage_tag = stage_tag
        self.digest = digest
        super().__init__(f"replay miss at stage {stage_tag!r} (digest {digest})")


@dataclass(frozen=True)
class ChatRequest:
    system_role: str
    user_prompt: str
    temperature: float = 1.0
    model: str = "DeepSeek-V3-0324"
    max_attempts: int = 3

    def __post_init__(self) -> None:
        if not self.system_role or not self.user_prompt:
            raise ValueError("prompts must be non-empty")

    def digest(self) -> str:
        payload = "\x00".join(
            [self.system_role, self.user_prompt, f"{self.temperature!r}", self.model]
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Transcript:
    request: ChatRequest
    reply: str
    latency: float
    attempt_count: int
    timestamp: str  # ISO-8601 UTC
    stage_tag: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": CASSETTE_VERSION,
            "digest": self.request.digest(),
            "stage_tag": self.stage_tag,
            "system_role": self.request.system_role,
            "user_prompt": self.request.user_prompt,
            "temperature": self.request.temperature,
            "model": self.request.model,
            "reply": self.reply,
            "latency": self.latency,
            "attempt_count": self.attempt_count,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Transcript":
        request = ChatRequest(
            system_role=d["system_role"],
            user_prompt=d["user_prompt"],
            temperature=float(d["temperature"]),
            model=d["model"],
        )
        return cls(
            request=request,
            reply=d["reply"],
            latency=float(d["latency"]),
            attempt_count=int(d["attempt_count"]),
            timestamp=d["timestamp"],
            stage_tag=d["stage_tag"],
        )


class Backend(Protocol):
    def complete(self, req: ChatRequest, stage_tag: str) -> Transcript: ...


def chat(backend: Backend, req: ChatRequest, stage_tag: str = "generation") -> str:
    """Send one request through a backend and return the reply text."""
    if stage_tag not in STAGE_TAGS:
        raise GatewayError(f"unknown stage tag {stage_tag!r}")
    return backend.complete(req, stage_tag).reply


class LiveBackend:
    """Chat-completions HTTP endpoint; retries transient failures with
    exponential backoff up to the request's max_attempts."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        backoff: float = 1.0,
        session: Any | None = None,
    ):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.backoff = backoff
        if session is None:
            import requests

            session = requests.Session()
        self.session = session
        if not self.base_url:
            raise GatewayError(f"no endpoint configured; set {ENV_BASE_URL}")

    def complete(self, req: ChatRequest, stage_tag: str) -> Transcript:
        started = time.perf_counter()
        last_error: Exception | None = None
        for attempt in range(1, req.max_attempts + 1):
            try:
                reply = self._once(req)
            except Exception as exc:  # noqa: BLE001 - transient failures retried
                last_error = exc
                if attempt < req.max_attempts:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
                continue
            return Transcript(
                request=req,
                reply=reply,
                latency=time.perf_counter() - started,
                attempt_count=attempt,
                timestamp=_utc_now(),
                stage_tag=stage_tag,
            )
        raise GatewayError(
            f"chat failed after {req.max_attempts} attempts: {last_error}"
        ) from last_error

    def _once(self, req: ChatRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = self.session.post(
            f"{self.base_url}/chat/completions",
            headers=headers,
            json={
                "model": req.model,
                "temperature": req.temperature,
                "messages": [
                    {"role": "system", "content": req.system_role},
                    {"role": "user", "content": req.user_prompt},
                ],
            },
            timeout=120,
        )
        response.raise_for_status()
        body = response.json()
        return body["choices"][0]["message"]["content"]


class ScriptedBackend:
    """Deterministic backend for tests: replies consumed in call order."""

    def __init__(self, replies: list[str]):
        self.replies = deque(replies)
        self.calls: list[tuple[str, ChatRequest]] = []

    def complete(self, req: ChatRequest, stage_tag: str) -> Transcript:
        self.calls.append((stage_tag, req))
        if not self.replies:
            raise GatewayError("scripted backend exhausted")
        return Transcript(
            request=req,
            reply=self.replies.popleft(),
            latency=0.0,
            attempt_count=1,
            timestamp="1970-01-01T00:00:00+00:00",
            stage_tag=stage_tag,
        )


class RecordingBackend:
    """Wraps another backend and appends every transcript to a cassette file
    before the reply is handed back."""

    def __init__(self, inner: Backend, cassette_path: str):
        self.inner = inner
        self.cassette_path = cassette_path
        os.makedirs(os.path.dirname(cassette_path) or ".", exist_ok=True)

    def complete(self, req: ChatRequest, stage_tag: str) -> Transcript:
        transcript = self.inner.complete(req, stage_tag)
        with open(self.cassette_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(transcript.to_dict(), separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return transcript


class ReplayBackend:
    """Replays a recorded cassette; per-digest FIFO, so repeated identical
    prompts (the normal case at temperature 1) replay their distinct
    recorded replies in recording order."""

    def __init__(self, transcripts: list[Transcript]):
        self._queues: dict[str, deque[Transcript]] = {}
        for t in transcripts:
            self._queues.setdefault(t.request.digest(), deque()).append(t)

    def complete(self, req: ChatRequest, stage_tag: str) -> Transcript:
        queue = self._queues.get(req.digest())
        if not queue:
            raise ReplayMiss(stage_tag, req.digest())
        return queue.popleft()


def record_cassette(inner: Backend, cassette_path: str) -> RecordingBackend:
    return RecordingBackend(inner, cassette_path)


def load_cassette(path: str) -> ReplayBackend:
    transcripts = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if record.get("version") != CASSETTE_VERSION:
                    raise ValueError(f"cassette version {record.get('version')!r}")
                transcripts.append(Transcript.from_dict(record))
            except (ValueError, KeyError) as exc:
                raise GatewayError(f"{path}:{lineno}: corrupt cassette record: {exc}") from exc
    return ReplayBackend(transcripts)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()

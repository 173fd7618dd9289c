"""Uniform dispatch over generative backends (text, multimodal, image
generation) with a record/replay transcript mock for offline determinism.

Transcript file format: append-only text, one entry per line:
``digest<TAB>base64(JSON payload)<NL>``. Replay is keyed by digest, not
sequence, so it is order-independent.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .model import ModelParams, OutputType
from .prompting import PartKind, PromptPart

DEFAULT_TIMEOUT_SECONDS = 60.0


class GatewayError(Exception):
    pass


class BackendUnavailableError(GatewayError):
    pass


class ModelRefusalError(GatewayError):
    pass


class TranscriptMissError(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"no transcript entry for request digest {digest}")
        self.digest = digest


class TranscriptIOError(GatewayError):
    pass


@dataclass(frozen=True)
class ModelRequest:
    model_kind: OutputType
    parts: tuple[PromptPart, ...]
    params: ModelParams
    request_tag: str = ""

    def __post_init__(self) -> None:
        if self.model_kind is OutputType.TEXT and any(
            p.kind is PartKind.IMAGE_PART for p in self.parts
        ):
            raise ValueError("TEXT requests cannot carry image parts")


@dataclass(frozen=True)
class ModelResponse:
    text: str | None = None
    image_ref: str | None = None
    latency_millis: float = 0.0
    backend_id: str = ""


def request_digest(request: ModelRequest) -> str:
    """Content hash of the canonical request encoding.

    Covers model kind, all parts, temperature, and stop tokens; excludes
    request_tag, which is telemetry only.
    """
    canonical = json.dumps(
        {
            "modelKind": request.model_kind.value,
            "parts": [{"kind": p.kind.value, "value": p.value} for p in request.parts],
            "temperature": request.params.temperature,
            "stopTokens": list(request.params.stop_tokens),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _encode_payload(response: ModelResponse) -> str:
    payload = json.dumps(
        {"text": response.text, "imageRef": response.image_ref},
        sort_keys=True,
        ensure_ascii=False,
    )
    return base64.b64encode(payload.encode("utf-8")).decode("ascii")


def _decode_payload(encoded: str, backend_id: str) -> ModelResponse:
    payload = json.loads(base64.b64decode(encoded.encode("ascii")).decode("utf-8"))
    return ModelResponse(
        text=payload.get("text"),
        image_ref=payload.get("imageRef"),
        backend_id=backend_id,
    )


class ModelGateway(Protocol):
    def generate(self, request: ModelRequest) -> ModelResponse: ...


class CallableGateway:
    """Adapter turning a plain function into a gateway; the recording seam
    for building transcripts in tests and tooling."""

    def __init__(self, fn: Callable[[ModelRequest], ModelResponse], backend_id: str = "callable"):
        self._fn = fn
        self.backend_id = backend_id

    def generate(self, request: ModelRequest) -> ModelResponse:
        return self._fn(request)


class ReplayGateway:
    """Answers from a recorded transcript; never touches the network."""

    def __init__(self, transcript_path: str | Path):
        self._path = Path(transcript_path)
        try:
            lines = self._path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise TranscriptIOError(f"cannot read transcript {transcript_path}: {exc}") from exc
        self._entries: dict[str, str] = {}
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                digest, encoded = line.split("\t", 1)
            except ValueError as exc:
                raise TranscriptIOError(f"{transcript_path}:{lineno}: malformed entry") from exc
            self._entries[digest] = encoded

    def __len__(self) -> int:
        return len(self._entries)

    def generate(self, request: ModelRequest) -> ModelResponse:
        digest = request_digest(request)
        encoded = self._entries.get(digest)
        if encoded is None:
            raise TranscriptMissError(digest)
        return _decode_payload(encoded, backend_id="replay")


class RecordingGateway:
    """Forwards to a live gateway and appends (digest, payload) per call."""

    def __init__(self, inner: ModelGateway, transcript_path: str | Path):
        self._inner = inner
        self._path = Path(transcript_path)
        self._lock = threading.Lock()

    def generate(self, request: ModelRequest) -> ModelResponse:
        response = self._inner.generate(request)
        line = f"{request_digest(request)}\t{_encode_payload(response)}\n"
        with self._lock:
            try:
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(line)
            except OSError as exc:
                raise TranscriptIOError(f"cannot append to {self._path}: {exc}") from exc
        return response


class HttpGateway:
    """Reference live adapter: one JSON POST per call, bearer-token auth.

    Endpoint and key come from MODEL_ENDPOINT / MODEL_API_KEY (or arguments);
    timeout from MODEL_TIMEOUT_SECONDS. No automatic retry: callers own
    retry policy.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        timeout_seconds: float | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get("MODEL_ENDPOINT", "")
        self.api_key = api_key or os.environ.get("MODEL_API_KEY", "")
        if timeout_seconds is None:
            timeout_seconds = float(os.environ.get("MODEL_TIMEOUT_SECONDS", DEFAULT_TIMEOUT_SECONDS))
        if not self.endpoint:
            raise BackendUnavailableError("no model endpoint configured (MODEL_ENDPOINT)")
        self._client = httpx.Client(
            timeout=timeout_seconds,
            transport=transport,
            headers={"Authorization": f"Bearer {self.api_key}"},
        )

    def generate(self, request: ModelRequest) -> ModelResponse:
        body = {
            "modelKind": request.model_kind.value,
            "parts": [{"kind": p.kind.value, "value": p.value} for p in request.parts],
            "params": {
                "temperature": request.params.temperature,
                "stopTokens": list(request.params.stop_tokens),
            },
        }
        started = time.monotonic()
        try:
            response = self._client.post(self.endpoint, json=body)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(str(exc)) from exc
        latency = (time.monotonic() - started) * 1000.0
        if response.status_code in (400, 422) and response.headers.get("x-model-refusal"):
            raise ModelRefusalError(response.text)
        if response.status_code != 200:
            raise BackendUnavailableError(f"backend returned HTTP {response.status_code}")
        payload = response.json()
        return ModelResponse(
            text=payload.get("text"),
            image_ref=payload.get("imageRef"),
            latency_millis=latency,
            backend_id=self.endpoint,
        )


def record_mode(inner: ModelGateway, transcript_path: str | Path) -> RecordingGateway:
    return RecordingGateway(inner, transcript_path)


def replay_mode(transcript_path: str | Path) -> ReplayGateway:
    return ReplayGateway(transcript_path)

"""Chat backends: the behavioral contract plus mock and HTTP adapters.

A backend is anything with `chat(ChatRequest) -> ChatResponse`. The
scripted mock replays a fixed response sequence for deterministic tests;
the HTTP adapter maps the package's provider-neutral wire format onto a
remote endpoint's native schema with bounded retries. Credentials come
from a named environment variable and are never written to run records.
"""

from __future__ import annotations

import base64
import json
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from ..errors import BackendUnavailable

DEFAULT_TEMPERATURE = 0.5
DEFAULT_MAX_OUTPUT_TOKENS = 4096

#: Deterministic token estimate used by local backends: ~4 chars per token,
#: flat charge per attached image.
_CHARS_PER_TOKEN = 4
_TOKENS_PER_IMAGE = 170


@dataclass(frozen=True)
class MessagePart:
    text: str | None = None
    image_ppm: bytes | None = None

    def __post_init__(self):
        if (self.text is None) == (self.image_ppm is None):
            raise ValueError("a part is either text or an image")


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    parts: tuple[MessagePart, ...]


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    #: Which pipeline role issued this request. Orchestration metadata for
    #: local backends; never serialized onto the wire.
    agent_role: str = ""

    def prompt_text(self) -> str:
        return "\n".join(
            part.text
            for msg in self.messages
            for part in msg.parts
            if part.text is not None
        )

    def image_count(self) -> int:
        return sum(
            1 for msg in self.messages for part in msg.parts if part.image_ppm is not None
        )


@dataclass(frozen=True)
class ChatResponse:
    text: str
    input_tokens: int
    output_tokens: int

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")


class AgentBackend(Protocol):
    def chat(self, request: ChatRequest) -> ChatResponse: ...


def estimate_tokens(request: ChatRequest, response_text: str) -> tuple[int, int]:
    """Deterministic token accounting for backends without a real meter."""
    input_tokens = len(request.prompt_text()) // _CHARS_PER_TOKEN
    input_tokens += _TOKENS_PER_IMAGE * request.image_count()
    return input_tokens, len(response_text) // _CHARS_PER_TOKEN


class ScriptedBackend:
    """Replays a fixed response sequence; repeats the last one when drained.

    Records every request it served so tests can inspect prompt contents.
    """

    def __init__(self, responses: Sequence[str]):
        if not responses:
            raise ValueError("scripted backend needs at least one response")
        self._responses = list(responses)
        self._cursor = 0
        self.requests: list[ChatRequest] = []

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        text = self._responses[min(self._cursor, len(self._responses) - 1)]
        self._cursor += 1
        input_tokens, output_tokens = estimate_tokens(request, text)
        return ChatResponse(text=text, input_tokens=input_tokens, output_tokens=output_tokens)


def _ppm_to_png(ppm: bytes) -> tuple[bytes, str]:
    """Convert PPM to PNG for providers that reject PPM; fall back to raw."""
    try:
        import io

        from PIL import Image as PILImage

        img = PILImage.open(io.BytesIO(ppm))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue(), "image/png"
    except Exception:
        return ppm, "image/x-portable-pixmap"


def _wire_message(msg: ChatMessage) -> dict:
    parts = []
    for part in msg.parts:
        if part.text is not None:
            parts.append({"text": part.text})
        else:
            payload, media = _ppm_to_png(part.image_ppm)
            parts.append(
                {"image": base64.b64encode(payload).decode("ascii"), "media_type": media}
            )
    return {"role": msg.role, "parts": parts}


def _generic_payload(request: ChatRequest) -> dict:
    return {
        "model": request.model_id,
        "temperature": request.temperature,
        "max_output_tokens": request.max_output_tokens,
        "messages": [_wire_message(m) for m in request.messages],
    }


def _anthropic_payload(request: ChatRequest) -> dict:
    messages = []
    system_chunks = []
    for msg in request.messages:
        content = []
        for part in msg.parts:
            if part.text is not None:
                content.append({"type": "text", "text": part.text})
            else:
                payload, media = _ppm_to_png(part.image_ppm)
                content.append(
                    {
                        "type": "image",
                        "source": {
                            "type": "base64",
                            "media_type": media,
                            "data": base64.b64encode(payload).decode("ascii"),
                        },
                    }
                )
        if msg.role == "system":
            system_chunks.extend(c["text"] for c in content if c["type"] == "text")
        else:
            messages.append({"role": msg.role, "content": content})
    payload = {
        "model": request.model_id,
        "max_tokens": request.max_output_tokens,
        "temperature": request.temperature,
        "messages": messages,
    }
    if system_chunks:
        payload["system"] = "\n".join(system_chunks)
    return payload


def _openai_payload(request: ChatRequest) -> dict:
    messages = []
    for msg in request.messages:
        content = []
        for part in msg.parts:
            if part.text is not None:
                content.append({"type": "text", "text": part.text})
            else:
                payload, media = _ppm_to_png(part.image_ppm)
                data = base64.b64encode(payload).decode("ascii")
                content.append(
                    {"type": "image_url", "image_url": {"url": f"data:{media};base64,{data}"}}
                )
        messages.append({"role": msg.role, "content": content})
    return {
        "model": request.model_id,
        "max_tokens": request.max_output_tokens,
        "temperature": request.temperature,
        "messages": messages,
    }


def _parse_generic(data: dict) -> ChatResponse:
    return ChatResponse(
        text=data["text"],
        input_tokens=int(data.get("input_tokens", 0)),
        output_tokens=int(data.get("output_tokens", 0)),
    )


def _parse_anthropic(data: dict) -> ChatResponse:
    text = "".join(
        block.get("text", "") for block in data.get("content", []) if block.get("type") == "text"
    )
    usage = data.get("usage", {})
    return ChatResponse(
        text=text,
        input_tokens=int(usage.get("input_tokens", 0)),
        output_tokens=int(usage.get("output_tokens", 0)),
    )


def _parse_openai(data: dict) -> ChatResponse:
    text = data["choices"][0]["message"]["content"]
    usage = data.get("usage", {})
    return ChatResponse(
        text=text,
        input_tokens=int(usage.get("prompt_tokens", 0)),
        output_tokens=int(usage.get("completion_tokens", 0)),
    )


_PROVIDERS = {
    "generic": (_generic_payload, _parse_generic),
    "anthropic": (_anthropic_payload, _parse_anthropic),
    "openai": (_openai_payload, _parse_openai),
}


class HttpBackend:
    """One HTTP POST per chat turn against a provider endpoint.

    `transport` is injectable for tests and must behave like
    `requests.post(url, json=..., headers=..., timeout=...)`.
    """

    def __init__(
        self,
        endpoint: str,
        provider: str = "generic",
        credential_env: str | None = None,
        timeout_seconds: float = 120.0,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        transport: Callable | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if provider not in _PROVIDERS:
            raise ValueError(f"unknown provider '{provider}'")
        self.endpoint = endpoint
        self.provider = provider
        self.credential_env = credential_env
        self.timeout_seconds = timeout_seconds
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self._sleep = sleep
        if transport is None:
            import requests

            transport = requests.post
        self._post = transport

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.credential_env:
            token = os.environ.get(self.credential_env, "")
            if self.provider == "anthropic":
                headers["x-api-key"] = token
                headers["anthropic-version"] = "2023-06-01"
            else:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def chat(self, request: ChatRequest) -> ChatResponse:
        build, parse = _PROVIDERS[self.provider]
        payload = build(request)
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                resp = self._post(
                    self.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.timeout_seconds,
                )
                status = getattr(resp, "status_code", 200)
                if status >= 500:
                    raise ConnectionError(f"server error {status}")
                if status >= 400:
                    raise BackendUnavailable(
                        f"endpoint rejected request with status {status}: "
                        f"{getattr(resp, 'text', '')[:200]}"
                    )
                return parse(resp.json() if callable(getattr(resp, "json", None)) else resp)
            except BackendUnavailable:
                raise
            except Exception as exc:  # transport failure: retry with backoff
                last_error = exc
                if attempt + 1 < self.max_retries:
                    self._sleep(self.backoff_seconds * 2**attempt)
        raise BackendUnavailable(
            f"transport failed after {self.max_retries} attempts: {last_error}"
        )

"""Minimal chat-completion transport over HTTP (stdlib only)."""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Any, Callable, Protocol

DEFAULT_TIMEOUT = 30.0
DEFAULT_FIELD_PATH = "choices.0.message.content"

Message = dict[str, str]


class TransportError(RuntimeError):
    """The endpoint could not be reached or returned an unusable response."""


class Transport(Protocol):
    def __call__(self, messages: list[Message]) -> str: ...


def extract_field(payload: Any, path: str) -> str:
    """Follow a dotted path (integers index lists) into a decoded JSON payload."""
    node = payload
    for part in path.split("."):
        try:
            node = node[int(part)] if isinstance(node, list) else node[part]
        except (KeyError, IndexError, ValueError, TypeError):
            raise TransportError(f"response has no field {path!r}") from None
    if not isinstance(node, str):
        raise TransportError(f"field {path!r} is not text")
    return node


@dataclass
class HttpTransport:
    url: str
    model: str = ""
    api_key: str | None = None
    timeout: float = DEFAULT_TIMEOUT
    field_path: str = DEFAULT_FIELD_PATH

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> HttpTransport:
        env = os.environ if env is None else env
        url = env.get("LLM_API_URL")
        if not url:
            raise TransportError("LLM_API_URL is not set")
        return cls(url=url, model=env.get("LLM_MODEL", ""), api_key=env.get("LLM_API_KEY"))

    def __call__(self, messages: list[Message]) -> str:
        body = json.dumps({"model": self.model, "messages": messages}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        request = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as exc:
            raise TransportError(str(exc)) from exc
        return extract_field(payload, self.field_path)


def stub_transport(replies: list[str] | Callable[[int], str]) -> Callable[[list[Message]], str]:
    """Deterministic transport for tests and offline runs.

    ``replies`` is either a list consumed in order (the last reply repeats) or
    a function of the call index.
    """
    calls = {"n": 0}

    def transport(messages: list[Message]) -> str:
        n = calls["n"]
        calls["n"] += 1
        if callable(replies):
            return replies(n)
        return replies[min(n, len(replies) - 1)]

    return transport

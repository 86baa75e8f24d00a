"""LLM transports: a chat-completion HTTP client and a fixture-replaying mock."""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

KEY_ENV = "EVOSTAGE_LLM_KEY"
URL_ENV = "EVOSTAGE_LLM_URL"
DEFAULT_URL = "https://api.openai.com/v1/chat/completions"


class ProviderError(RuntimeError):
    """The provider could not produce a reply at all (transport, auth, missing fixture)."""


@dataclass(frozen=True)
class LLMRequest:
    role: str  # "coordinator" or "coder_<component_id>"
    template_id: str
    stage_index: int
    generation: int
    attempt: int
    model: str
    temperature: float
    prompt: str


class Provider:
    def __init__(self):
        self.log: list[LLMRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: LLMRequest) -> str:
        with self._lock:
            self.log.append(request)
        return self._complete(request)

    def _complete(self, request: LLMRequest) -> str:
        raise NotImplementedError


def fixture_path(root, request: LLMRequest) -> Path:
    return (Path(root) / request.role / request.template_id
            / f"g{request.generation}_s{request.stage_index}_a{request.attempt}.txt")


class MockProvider(Provider):
    """Replies from ``<role>/<template_id>/g<gen>_s<stage>_a<attempt>.txt``; unknown keys raise."""

    def __init__(self, fixture_dir):
        super().__init__()
        self.root = Path(fixture_dir)
        if not self.root.is_dir():
            raise ProviderError(f"fixture directory {self.root} does not exist")
        self._cache: dict[Path, str] = {}
        for path in self.root.rglob("*.txt"):
            self._cache[path] = path.read_text(encoding="utf-8")

    def _complete(self, request: LLMRequest) -> str:
        path = fixture_path(self.root, request)
        try:
            return self._cache[path]
        except KeyError:
            raise ProviderError(f"no fixture for {path.relative_to(self.root)}") from None


class HTTPProvider(Provider):
    """OpenAI-style chat completions endpoint; bearer token from EVOSTAGE_LLM_KEY."""

    def __init__(self, url: str | None = None, api_key: str | None = None, timeout: float = 120.0,
                 retries: int = 3, backoff: float = 1.0, system_prompt: str = "You are an expert algorithm designer."):
        super().__init__()
        self.url = url or os.environ.get(URL_ENV, DEFAULT_URL)
        self.api_key = api_key or os.environ.get(KEY_ENV)
        if not self.api_key:
            raise ProviderError(f"set {KEY_ENV} to use the HTTP provider")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.system_prompt = system_prompt
        self._client = httpx.Client(timeout=timeout)

    def _complete(self, request: LLMRequest) -> str:
        payload = {
            "model": request.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": self.system_prompt},
                {"role": "user", "content": request.prompt},
            ],
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last = None
        for attempt in range(self.retries):
            try:
                resp = self._client.post(self.url, json=payload, headers=headers)
                if resp.status_code >= 500 or resp.status_code == 429:
                    last = f"HTTP {resp.status_code}"
                else:
                    resp.raise_for_status()
                    return resp.json()["choices"][0]["message"]["content"] or ""
            except httpx.HTTPStatusError as exc:
                raise ProviderError(f"provider rejected the request: {exc}") from exc
            except (httpx.TransportError, KeyError, IndexError, ValueError) as exc:
                last = f"{type(exc).__name__}: {exc}"
            if attempt + 1 < self.retries:
                time.sleep(min(self.backoff * 2**attempt, 10.0))
        raise ProviderError(f"provider failed after {self.retries} attempts ({last})")

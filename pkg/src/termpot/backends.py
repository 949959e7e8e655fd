"""Response-generation backends: a remote chat-completion client and the
deterministic emulator behind one interface.

The gateway always has the emulator's answer in hand (it is the state oracle),
so a dead or misbehaving remote backend degrades to emulator output instead of
dropping the connection.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from enum import Enum

import httpx

from . import emulator
from .emulator import CommandOutcome
from .personas import PersonaRegistry
from .shadowstate import ShadowState

log = logging.getLogger(__name__)


class BackendKind(Enum):
    REMOTE_LLM = "remote_llm"
    EMULATOR = "emulator"


class HealthStatus(Enum):
    HEALTHY = "healthy"
    DEGRADED = "degraded"
    DOWN = "down"


class BackendUnavailable(Exception):
    pass


@dataclass
class GenerationParams:
    temperature: float = 0.0
    max_output_tokens: int = 1024


@dataclass
class BackendRequest:
    context_entries: list[tuple[str, str]]
    persona_id: str
    generation_params: GenerationParams = field(default_factory=GenerationParams)
    # Plumbing for the emulator backend and the guardrail's oracle path.
    state: ShadowState | None = None
    command: str | None = None
    expected_outcome: CommandOutcome | None = None

    def last_attacker_text(self) -> str:
        if self.command is not None:
            return self.command
        for role, text in reversed(self.context_entries):
            if role == "attacker":
                return text
        return ""


@dataclass
class BackendResponse:
    raw_text: str
    latency_ms: int
    backend_kind: BackendKind
    truncated: bool = False


class EmulatorBackend:
    """Deterministic offline backend; always healthy."""

    kind = BackendKind.EMULATOR

    def __init__(self, registry: PersonaRegistry):
        self.registry = registry

    def complete(self, request: BackendRequest) -> BackendResponse:
        start = time.perf_counter()
        if request.expected_outcome is not None:
            text = request.expected_outcome.rendered_output
        else:
            if request.state is None:
                raise ValueError("emulator backend needs a ShadowState")
            persona = self.registry.get(request.persona_id)
            outcome = emulator.execute(
                request.state, persona, request.last_attacker_text()
            )
            text = outcome.rendered_output
        latency_ms = int((time.perf_counter() - start) * 1000)
        return BackendResponse(text, latency_ms, self.kind)

    def health(self) -> HealthStatus:
        return HealthStatus.HEALTHY


ROLE_TO_MESSAGE = {"instruction": "system", "attacker": "user", "honeypot": "assistant"}


class RemoteLLMBackend:
    """Chat-completion HTTP client (messages-with-roles wire contract)."""

    kind = BackendKind.REMOTE_LLM

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "TERMPOT_API_KEY",
        timeout_s: float = 20.0,
        degraded_threshold_ms: int = 5000,
        auto_continue: bool = False,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.degraded_threshold_ms = degraded_threshold_ms
        self.auto_continue = auto_continue
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def _post(self, body: dict) -> httpx.Response:
        url = self.endpoint + "/chat/completions"
        if log.isEnabledFor(logging.DEBUG):
            log.debug("backend request to %s: %s", url, body)
        return self._client.post(url, json=body, headers=self._headers())

    def _call_once(self, request: BackendRequest) -> tuple[str, bool]:
        messages = [
            {"role": ROLE_TO_MESSAGE.get(role, "user"), "content": text}
            for role, text in request.context_entries
        ]
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": request.generation_params.temperature,
            "max_tokens": request.generation_params.max_output_tokens,
        }
        response = self._post(body)
        response.raise_for_status()
        payload = response.json()
        choice = (payload.get("choices") or [{}])[0]
        text = (choice.get("message") or {}).get("content") or ""
        truncated = choice.get("finish_reason") == "length"
        return text, truncated

    def complete(self, request: BackendRequest) -> BackendResponse:
        start = time.perf_counter()
        last_error: Exception | None = None
        for attempt in range(2):  # one retry on transport failure
            try:
                text, truncated = self._call_once(request)
                if truncated and self.auto_continue:
                    follow_up = BackendRequest(
                        context_entries=request.context_entries
                        + [("honeypot", text), ("attacker", "continue")],
                        persona_id=request.persona_id,
                        generation_params=request.generation_params,
                    )
                    more, truncated = self._call_once(follow_up)
                    text += more
                latency_ms = int((time.perf_counter() - start) * 1000)
                return BackendResponse(text, latency_ms, self.kind, truncated)
            except (httpx.HTTPError, ValueError, KeyError) as exc:
                last_error = exc
                log.warning("remote backend attempt %d failed: %s", attempt + 1, exc)
        raise BackendUnavailable(str(last_error))

    def health(self) -> HealthStatus:
        probe = BackendRequest(
            context_entries=[("instruction", "reply with: ok")],
            persona_id="health",
            generation_params=GenerationParams(max_output_tokens=1),
        )
        start = time.perf_counter()
        try:
            self._call_once(probe)
        except Exception:
            return HealthStatus.DOWN
        elapsed_ms = (time.perf_counter() - start) * 1000
        if elapsed_ms > self.degraded_threshold_ms:
            return HealthStatus.DEGRADED
        return HealthStatus.HEALTHY


def health_check(backend) -> HealthStatus:
    return backend.health()

"""Per-connection session lifecycle and the turn pipeline.

One turn: decode -> emulator oracle (authoritative shadow state) -> backend
-> guardrail -> context append -> tactic classification -> event record.
The pipeline is synchronous and transport-free; the TCP gateway wraps it.
"""

from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

from . import emulator
from .backends import (
    BackendKind,
    BackendRequest,
    BackendResponse,
    BackendUnavailable,
    EmulatorBackend,
    GenerationParams,
)
from .context import ContextBuffer
from .eventlog import EventLogWriter, utc_now_iso
from .guardrail import GuardrailPolicy, ValidationVerdict, enforce
from .personas import Persona
from .shadowstate import Mode, ShadowState
from .ttp import TtpEvent, classify, session_histogram

log = logging.getLogger(__name__)


class SessionStatus(Enum):
    ACTIVE = "active"
    RESET_PENDING = "reset_pending"
    CLOSED = "closed"


@dataclass
class TurnResult:
    final_text: str
    verdict: ValidationVerdict
    events: list[TtpEvent]
    backend_kind: BackendKind
    latency_ms: int
    fell_back_to_emulator: bool = False


@dataclass
class SessionSummary:
    session_id: str
    turn_count: int
    tactic_histogram: dict[str, int]
    duration_s: float
    cause: str


@dataclass(eq=False)
class Session:
    persona: Persona
    state: ShadowState
    context: ContextBuffer
    backend: object  # EmulatorBackend or RemoteLLMBackend
    peer: str = "local"
    mode: Mode = Mode.REPLAY
    policy: GuardrailPolicy = field(default_factory=GuardrailPolicy)
    sink: EventLogWriter | None = None
    generation_params: GenerationParams = field(default_factory=GenerationParams)
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    started_at: float = field(default_factory=time.time)
    turn_index: int = 0
    status: SessionStatus = SessionStatus.ACTIVE
    events: list[TtpEvent] = field(default_factory=list)
    _summary: SessionSummary | None = None

    @property
    def persona_id(self) -> str:
        return self.persona.persona_id


def open_session(
    persona: Persona,
    state: ShadowState,
    backend,
    peer: str = "local",
    mode: Mode = Mode.REPLAY,
    token_budget: int = 8000,
    policy: GuardrailPolicy | None = None,
    sink: EventLogWriter | None = None,
) -> Session:
    context = ContextBuffer(instruction=persona.instruction_prompt, budget=token_budget)
    session = Session(
        persona=persona,
        state=state,
        context=context,
        backend=backend,
        peer=peer,
        mode=mode,
        policy=policy or GuardrailPolicy(),
        sink=sink,
    )
    if sink is not None:
        sink.append(
            {
                "ts": utc_now_iso(),
                "event": "session_open",
                "session_id": session.session_id,
                "peer": peer,
                "persona": persona.persona_id,
            }
        )
    return session


def _is_meta_line(text: str) -> bool:
    stripped = text.strip()
    return stripped.startswith("{") and stripped.endswith("}") and len(stripped) > 1


def _scrub_meta(text: str) -> str:
    """Serve mode never forwards curly-bracket spans to a remote backend."""
    out = []
    depth = 0
    for ch in text:
        if ch == "{":
            depth += 1
            continue
        if ch == "}":
            depth = max(0, depth - 1)
            continue
        if depth == 0:
            out.append(ch)
    return "".join(out)


def run_turn(session: Session, command_text: str) -> TurnResult | None:
    """Process one decoded input line. Returns None for empty input
    (the gateway re-emits the bare prompt) and for closed sessions."""
    if session.status == SessionStatus.CLOSED:
        return None
    if not command_text.strip():
        return None

    # Operator meta channel: honored in replay mode only; in serve mode the
    # braces are plain attacker bytes (no out-of-band channel for attackers).
    if session.mode == Mode.REPLAY and _is_meta_line(command_text):
        if session.sink is not None:
            session.sink.append(
                {
                    "ts": utc_now_iso(),
                    "event": "operator_note",
                    "session_id": session.session_id,
                    "note": command_text.strip(),
                }
            )
        return TurnResult(
            final_text="",
            verdict=ValidationVerdict("pass", [], ""),
            events=[],
            backend_kind=BackendKind.EMULATOR,
            latency_ms=0,
        )

    started = time.perf_counter()
    outcome = emulator.execute(session.state, session.persona, command_text)

    backend_kind = getattr(session.backend, "kind", BackendKind.EMULATOR)
    fell_back = False
    if backend_kind == BackendKind.EMULATOR:
        response = BackendResponse(
            raw_text=outcome.rendered_output,
            latency_ms=int((time.perf_counter() - started) * 1000),
            backend_kind=BackendKind.EMULATOR,
        )
        regenerate = None
        request = None
    else:
        request = _build_request(session, command_text, outcome)
        try:
            response = session.backend.complete(request)
        except BackendUnavailable as exc:
            log.warning("backend unavailable, emulator fallback: %s", exc)
            fell_back = True
            response = BackendResponse(
                raw_text=outcome.rendered_output,
                latency_ms=int((time.perf_counter() - started) * 1000),
                backend_kind=BackendKind.EMULATOR,
            )
            if session.sink is not None:
                session.sink.append(
                    {
                        "ts": utc_now_iso(),
                        "event": "backend_degraded",
                        "session_id": session.session_id,
                        "error": str(exc),
                    }
                )
        regenerate = _make_regenerator(session, request) if not fell_back else None

    verdict = enforce(response, outcome, session.policy, regenerate=regenerate)
    final_text = verdict.final_text

    session.context.append_turn(command_text, final_text, session.state)

    events = classify(
        command_text,
        session.persona,
        outcome.state_delta,
        session_id=session.session_id,
        turn_index=session.turn_index,
    )
    session.events.extend(events)

    latency_ms = response.latency_ms
    if session.sink is not None:
        session.sink.append(
            {
                "ts": utc_now_iso(),
                "session_id": session.session_id,
                "peer": session.peer,
                "persona": session.persona_id,
                "turn_index": session.turn_index,
                "input": command_text,
                "output": final_text,
                "tactic_tags": [e.tactic.value for e in events],
                "technique_hints": [e.technique_hint for e in events],
                "severity": max((e.severity for e in events), default=1),
                "verdict": verdict.verdict,
                "verdict_reasons": verdict.reasons,
                "backend": response.backend_kind.value
                + ("_fallback" if fell_back else ""),
                "latency_ms": latency_ms,
            }
        )

    session.turn_index += 1
    return TurnResult(
        final_text=final_text,
        verdict=verdict,
        events=events,
        backend_kind=response.backend_kind,
        latency_ms=latency_ms,
        fell_back_to_emulator=fell_back or verdict.verdict == "fell_back",
    )


def _build_request(
    session: Session, command_text: str, outcome: emulator.CommandOutcome
) -> BackendRequest:
    entries = session.context.as_messages()
    attacker_text = command_text
    if session.mode == Mode.SERVE:
        entries = [(role, _scrub_meta(text)) for role, text in entries]
        attacker_text = _scrub_meta(command_text)
    entries = entries + [("attacker", attacker_text)]
    return BackendRequest(
        context_entries=entries,
        persona_id=session.persona_id,
        generation_params=session.generation_params,
        state=session.state,
        command=attacker_text,
        expected_outcome=outcome,
    )


def _make_regenerator(session: Session, request: BackendRequest):
    from .guardrail import REINFORCEMENT_SUFFIX

    def regenerate() -> BackendResponse:
        entries = list(request.context_entries)
        if entries and entries[0][0] == "instruction":
            entries[0] = ("instruction", entries[0][1] + "\n" + REINFORCEMENT_SUFFIX)
        retry = BackendRequest(
            context_entries=entries,
            persona_id=request.persona_id,
            generation_params=request.generation_params,
            state=request.state,
            command=request.command,
            expected_outcome=request.expected_outcome,
        )
        return session.backend.complete(retry)

    return regenerate


def close_session(session: Session, cause: str = "peer_disconnect") -> SessionSummary:
    """Idempotent; the second close returns the cached summary silently."""
    if session._summary is not None:
        return session._summary
    histogram = {t.value: n for t, n in session_histogram(session.events).items()}
    summary = SessionSummary(
        session_id=session.session_id,
        turn_count=session.turn_index,
        tactic_histogram=histogram,
        duration_s=round(time.time() - session.started_at, 3),
        cause=cause,
    )
    session.status = SessionStatus.CLOSED
    session._summary = summary
    if session.sink is not None:
        session.sink.append(
            {
                "ts": utc_now_iso(),
                "event": "session_close",
                "session_id": session.session_id,
                "peer": session.peer,
                "persona": session.persona_id,
                "turns": summary.turn_count,
                "tactic_histogram": histogram,
                "duration_s": summary.duration_s,
                "cause": cause,
            }
        )
    return summary

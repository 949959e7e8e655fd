"""termpot: a dynamic terminal honeypot.

Attacker-facing Linux / Windows / Mac / Jupyter sessions answered by either a
remote chat-completion backend or a built-in deterministic emulator, with
shadow system state, token-budget context resets, break-character guardrails,
and structured TTP event logging.
"""

from .backends import (
    BackendKind,
    BackendRequest,
    BackendResponse,
    BackendUnavailable,
    EmulatorBackend,
    HealthStatus,
    RemoteLLMBackend,
    health_check,
)
from .context import ContextBuffer, build_state_digest, estimate_tokens
from .emulator import CommandOutcome, apply_timestomp, execute, render_dir_listing
from .guardrail import (
    GuardrailPolicy,
    ValidationVerdict,
    detect_break_character,
    enforce,
    extract_terminal_block,
)
from .personas import Persona, PersonaRegistry, get_persona, seed_shadow_state
from .session import Session, close_session, open_session, run_turn
from .shadowstate import Mode, OsFamily, ShadowState, StateDelta, VirtualClock
from .ttp import Tactic, TtpEvent, classify, session_histogram

__version__ = "0.1.0"

__all__ = [
    "BackendKind",
    "BackendRequest",
    "BackendResponse",
    "BackendUnavailable",
    "CommandOutcome",
    "ContextBuffer",
    "EmulatorBackend",
    "GuardrailPolicy",
    "HealthStatus",
    "Mode",
    "OsFamily",
    "Persona",
    "PersonaRegistry",
    "RemoteLLMBackend",
    "Session",
    "ShadowState",
    "StateDelta",
    "Tactic",
    "TtpEvent",
    "ValidationVerdict",
    "VirtualClock",
    "apply_timestomp",
    "build_state_digest",
    "classify",
    "close_session",
    "detect_break_character",
    "enforce",
    "estimate_tokens",
    "execute",
    "extract_terminal_block",
    "get_persona",
    "health_check",
    "open_session",
    "render_dir_listing",
    "run_turn",
    "seed_shadow_state",
    "session_histogram",
]

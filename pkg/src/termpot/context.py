"""Conversation context with a hard token budget and instructional resets.

The backend only ever sees what fits in the budget. When appending a turn
would blow past it, the buffer is rebuilt as [instruction, state digest] so
the role-play instruction is never lost and the fake machine stays coherent
across the reset (state lives in ShadowState, not in prose history).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .shadowstate import ShadowState

log = logging.getLogger(__name__)

ROLE_INSTRUCTION = "instruction"
ROLE_ATTACKER = "attacker"
ROLE_HONEYPOT = "honeypot"

DEFAULT_BUDGET = 8000


def estimate_tokens(text: str) -> int:
    """Deterministic backend-agnostic estimate: one token per 4 characters."""
    return math.ceil(len(text) / 4)


def build_state_digest(state: ShadowState | None) -> str:
    """Compact honeypot-authored summary of shadow-state changes since seed."""
    if state is None:
        return "Session state summary: no changes to the system so far."
    diff = state.diff_from_seed()
    bullets: list[str] = []
    if diff["cwd"]:
        bullets.append(f"- current directory: {diff['cwd']}")
    if diff["created"]:
        bullets.append("- files created: " + ", ".join(diff["created"]))
    if diff["deleted"]:
        bullets.append("- files deleted: " + ", ".join(diff["deleted"]))
    for ip, mac, entry_type in diff["arp"]:
        bullets.append(f"- ARP entry changed: {ip} -> {mac} ({entry_type})")
    for change in diff["registry"]:
        bullets.append(f"- registry: {change}")
    if diff["installed"]:
        bullets.append("- packages installed: " + ", ".join(diff["installed"]))
    if not bullets:
        return "Session state summary: no changes to the system so far."
    return "Session state summary:\n" + "\n".join(bullets)


@dataclass
class ContextEntry:
    role: str
    text: str


@dataclass
class ContextBuffer:
    """Ordered (role, text) history plus bookkeeping for the budget."""

    instruction: str
    budget: int = DEFAULT_BUDGET
    entries: list[ContextEntry] = field(default_factory=list)
    token_estimate: int = 0
    resets_performed: int = 0
    truncations: int = 0

    def __post_init__(self):
        if not self.entries:
            self.entries = [ContextEntry(ROLE_INSTRUCTION, self.instruction)]
        self.token_estimate = self.recompute_estimate()

    def recompute_estimate(self) -> int:
        return sum(estimate_tokens(e.text) for e in self.entries)

    def perform_reset(self, state: ShadowState | None = None) -> None:
        """Replace history with [instruction, state digest]."""
        digest = build_state_digest(state)
        self.entries = [
            ContextEntry(ROLE_INSTRUCTION, self.instruction),
            ContextEntry(ROLE_INSTRUCTION, digest),
        ]
        self.resets_performed += 1
        self.token_estimate = self.recompute_estimate()

    def append_turn(
        self,
        attacker_text: str,
        honeypot_text: str,
        state: ShadowState | None = None,
    ) -> None:
        cost = estimate_tokens(attacker_text) + estimate_tokens(honeypot_text)
        if self.token_estimate + cost > self.budget:
            self.perform_reset(state)
        remaining = self.budget - self.token_estimate - estimate_tokens(attacker_text)
        if estimate_tokens(honeypot_text) > remaining:
            keep_chars = max(0, remaining * 4)
            honeypot_text = honeypot_text[:keep_chars]
            self.truncations += 1
            log.warning(
                "honeypot text truncated to %d chars to fit token budget", keep_chars
            )
        self.entries.append(ContextEntry(ROLE_ATTACKER, attacker_text))
        self.entries.append(ContextEntry(ROLE_HONEYPOT, honeypot_text))
        self.token_estimate = self.recompute_estimate()

    def as_messages(self) -> list[tuple[str, str]]:
        return [(e.role, e.text) for e in self.entries]

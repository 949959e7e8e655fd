"""Classification of attacker commands into tactic tags.

Pure functions of (command, persona, state delta); the rule table favors
precision over breadth, and anything unmatched stays UNCLASSIFIED rather
than guessing. See README for the mapping to common industry vocabularies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .personas import Persona
from .shadowstate import StateDelta


class Tactic(Enum):
    RECON_HOST = "RECON_HOST"
    RECON_NETWORK = "RECON_NETWORK"
    EXECUTION = "EXECUTION"
    PERSISTENCE_INSTALL = "PERSISTENCE_INSTALL"
    DEFENSE_EVASION = "DEFENSE_EVASION"
    ANTI_FORENSICS = "ANTI_FORENSICS"
    SPOOFING = "SPOOFING"
    DOS_ATTEMPT = "DOS_ATTEMPT"
    DESTRUCTION = "DESTRUCTION"
    UNCLASSIFIED = "UNCLASSIFIED"


SEVERITY = {
    Tactic.DESTRUCTION: 5,
    Tactic.DOS_ATTEMPT: 5,
    Tactic.ANTI_FORENSICS: 4,
    Tactic.SPOOFING: 4,
    Tactic.DEFENSE_EVASION: 4,
    Tactic.PERSISTENCE_INSTALL: 3,
    Tactic.RECON_HOST: 2,
    Tactic.RECON_NETWORK: 2,
    Tactic.EXECUTION: 2,
    Tactic.UNCLASSIFIED: 1,
}


@dataclass
class TtpEvent:
    session_id: str
    turn_index: int
    tactic: Tactic
    technique_hint: str
    evidence: str
    severity: int
    ts: str = field(
        default_factory=lambda: datetime.now(timezone.utc)
        .isoformat()
        .replace("+00:00", "Z")
    )

    def to_dict(self) -> dict:
        return {
            "ts": self.ts,
            "session_id": self.session_id,
            "turn_index": self.turn_index,
            "tactic": self.tactic.value,
            "technique_hint": self.technique_hint,
            "evidence": self.evidence,
            "severity": self.severity,
        }


RECON_HOST_COMMANDS = {
    "dir", "ls", "pwd", "whoami", "uname", "tracert", "get-childitem",
}

# Registry paths whose removal weakens security policy rather than cleaning up.
SECURITY_POLICY_PATTERNS = [
    re.compile(r"policies\\system", re.IGNORECASE),
    re.compile(r"enablelua", re.IGNORECASE),
    re.compile(r"windows defender", re.IGNORECASE),
    re.compile(r"firewallpolicy", re.IGNORECASE),
]

TIMESTOMP_RE = re.compile(
    r"\.\s*(CreationTime|LastWriteTime|LastAccessTime)\s*=", re.IGNORECASE
)

INSTALLER_WORDS = {"wget", "apt", "apt-get", "apt-key", "curl", "pip", "dpkg", "msiexec"}

SCRIPT_WORDS = {"python", "python3", "sh", "bash", "perl", "ruby", "node"}


def _first_word(command_line: str) -> str:
    text = command_line.strip()
    if text.startswith("sudo "):
        text = text[5:].strip()
    return text.split()[0].lower() if text.split() else ""


def classify(
    command_line: str,
    persona: Persona,
    state_delta: StateDelta | None = None,
    session_id: str = "",
    turn_index: int = 0,
) -> list[TtpEvent]:
    """Tag one attacker command; always yields at least one event."""
    delta = state_delta or StateDelta()
    raw = command_line.strip()
    lowered = raw.lower()
    word = _first_word(raw)
    found: list[tuple[Tactic, str]] = []

    def add(tactic: Tactic, hint: str) -> None:
        if (tactic, hint) not in found:
            found.append((tactic, hint))

    if word == "nmap":
        add(Tactic.RECON_NETWORK, "network-scan")
    if word == "arp" and "-s" in lowered:
        add(Tactic.SPOOFING, "arp-cache-poison")
    elif word == "arp":
        add(Tactic.RECON_HOST, "arp-table-enumeration")
    if word == "ping":
        if re.search(r"-l\s+\d{4,}", lowered) or "goto :loop" in lowered:
            add(Tactic.DOS_ATTEMPT, "ping-flood")
        else:
            add(Tactic.RECON_HOST, "reachability-probe")
    elif "goto :loop" in lowered and "ping" in lowered:
        add(Tactic.DOS_ATTEMPT, "ping-flood-loop")
    if raw.replace(" ", "").startswith(":(){"):
        add(Tactic.DOS_ATTEMPT, "fork-bomb")
    if TIMESTOMP_RE.search(raw):
        add(Tactic.ANTI_FORENSICS, "timestomp")
    if word == "reg" and "delete" in lowered:
        if any(p.search(raw) for p in SECURITY_POLICY_PATTERNS):
            add(Tactic.DEFENSE_EVASION, "security-policy-removal")
        else:
            add(Tactic.UNCLASSIFIED, "registry-write")
    destructive = (
        (word == "del" and "*" in raw)
        or (word == "rm" and re.search(r"-[a-z]*r", lowered))
        or (word in ("ren", "rename") and "*" in raw)
    )
    if destructive and (delta.deleted or delta.moved):
        add(Tactic.DESTRUCTION, "mass-file-removal")
    if word in INSTALLER_WORDS:
        add(Tactic.PERSISTENCE_INSTALL, "tool-install")
    if word in SCRIPT_WORDS or lowered.startswith(("%timeit", "print(")):
        add(Tactic.EXECUTION, "script-execution")
    if word in RECON_HOST_COMMANDS and not found:
        add(Tactic.RECON_HOST, "host-enumeration")

    if not found:
        found.append((Tactic.UNCLASSIFIED, "unmatched-command"))
    return [
        TtpEvent(
            session_id=session_id,
            turn_index=turn_index,
            tactic=tactic,
            technique_hint=hint,
            evidence=command_line,
            severity=SEVERITY[tactic],
        )
        for tactic, hint in found
    ]


def session_histogram(events: list[TtpEvent]) -> dict[Tactic, int]:
    """Per-tactic counts in stable enum order."""
    counts: dict[Tactic, int] = {}
    for tactic in Tactic:
        n = sum(1 for e in events if e.tactic == tactic)
        if n:
            counts[tactic] = n
    return counts

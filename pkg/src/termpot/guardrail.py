"""Validation of backend responses before they reach the attacker.

A response that apologizes, explains, or contradicts the shadow state
fingerprints the honeypot. The pipeline extracts the terminal block, detects
break-character refusals, cross-checks against the emulator's answer, and
repairs / regenerates / falls back as needed. A verdict is always produced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .backends import BackendResponse
from .emulator import CommandOutcome

DEFAULT_REFUSAL_PHRASES = [
    "I'm sorry",
    "As a language model",
    "I am not able to execute",
    "It is not recommended",
    "I can't execute",
    "I don't have the ability",
]

# Demonstrated corrective phrasing appended to the instruction on regeneration.
REINFORCEMENT_SUFFIX = (
    "I want you only to reply with the terminal output inside one unique code "
    "block, and nothing else. Do not write explanations."
)


@dataclass
class GuardrailPolicy:
    max_regenerations: int = 1
    refusal_phrases: list[str] = field(
        default_factory=lambda: list(DEFAULT_REFUSAL_PHRASES)
    )
    strip_meta_spans: bool = True
    check_consistency: bool = True


@dataclass
class ValidationVerdict:
    verdict: str  # pass | repaired | regenerated | fell_back
    reasons: list[str] = field(default_factory=list)
    final_text: str = ""


FENCE_RE = re.compile(r"```[^\n]*\n(.*?)(?:```|\Z)", re.DOTALL)


def extract_terminal_block(raw_text: str) -> tuple[str, bool]:
    """Content of the first fenced/indented block, and whether prose surrounds it.

    Markdown-style indented blocks are only recognized behind a short prose
    preamble ("Here is the output:") — real terminal output is full of
    indented lines and must pass through untouched.
    """
    match = FENCE_RE.search(raw_text)
    if match:
        inside = match.group(1).rstrip("\n")
        outside = (raw_text[: match.start()] + raw_text[match.end() :]).strip()
        return inside, bool(outside)
    lines = raw_text.split("\n")
    nonempty = [(i, ln) for i, ln in enumerate(lines) if ln.strip()]
    indented = [i for i, ln in nonempty if ln.startswith("    ")]
    prose = [i for i, ln in nonempty if not ln.startswith("    ")]
    if indented and prose and len(prose) <= 2 and max(prose) < min(indented):
        block = "\n".join(lines[i][4:] for i in indented)
        return block, True
    return raw_text.rstrip("\n"), False


def detect_break_character(
    text: str, phrases: list[str] | None = None
) -> tuple[bool, str | None]:
    """True when the backend stepped out of the terminal role.

    Phrases match case-insensitively at line starts or sentence starts; the
    refusals seen in practice open a sentence even when buried mid-paragraph.
    """
    phrases = phrases if phrases is not None else DEFAULT_REFUSAL_PHRASES
    for phrase in phrases:
        pattern = re.compile(
            r"(?:^|\n|[.!?]\s+|\{\s*)" + re.escape(phrase), re.IGNORECASE
        )
        if pattern.search(text):
            return True, phrase
    return False, None


# Volatile fields masked before structural comparison: timestamps, serial
# numbers, latencies, transfer rates.
VOLATILE_PATTERNS = [
    (re.compile(r"\d{2}/\d{2}/\d{4}\s+\d{2}:\d{2} [AP]M"), "<STAMP>"),
    (re.compile(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}(:\d{2})?"), "<DATETIME>"),
    (re.compile(r"\btime[=<]\d+ms"), "time=<MS>"),
    (re.compile(r"= \d+ms"), "= <MS>"),
    (re.compile(r"\d+(\.\d+)? ms\b"), "<MS> ms"),
    (re.compile(r"Serial Number is [0-9A-Za-z-]+"), "Serial Number is <SERIAL>"),
    (re.compile(r"[\d.]+ [KMG]B/s"), "<RATE>"),
    (re.compile(r"in [\d.]+ seconds"), "in <SECS> seconds"),
    (re.compile(r"Current time: \d{2}:\d{2}:\d{2}\.\d{2}"), "Current time: <TIME>"),
]


def mask_volatile(text: str) -> str:
    for pattern, replacement in VOLATILE_PATTERNS:
        text = pattern.sub(replacement, text)
    return text


def check_state_consistency(
    text: str, expected: CommandOutcome
) -> tuple[bool, list[str]]:
    """Structural comparison against the emulator's answer after masking."""
    got_lines = [ln.rstrip() for ln in mask_volatile(text).splitlines() if ln.strip()]
    want_lines = [
        ln.rstrip()
        for ln in mask_volatile(expected.rendered_output).splitlines()
        if ln.strip()
    ]
    if got_lines == want_lines:
        return True, []
    mismatches: list[str] = []
    want_set = set(want_lines)
    got_set = set(got_lines)
    for line in got_lines:
        if line not in want_set:
            mismatches.append(f"unexpected: {line}")
    for line in want_lines:
        if line not in got_set:
            mismatches.append(f"missing: {line}")
    return False, mismatches or ["line order differs"]


META_SPAN_RE = re.compile(r"\{[^{}]*\}")


def strip_meta_spans(text: str) -> tuple[str, bool]:
    """Remove {curly-bracket} commentary the backend was told to use for English."""
    stripped, count = META_SPAN_RE.subn("", text)
    if count:
        stripped = "\n".join(ln.rstrip() for ln in stripped.splitlines())
        stripped = re.sub(r"\n{3,}", "\n\n", stripped).strip("\n")
    return stripped, bool(count)


def enforce(
    response: BackendResponse,
    expected: CommandOutcome,
    policy: GuardrailPolicy | None = None,
    regenerate: Callable[[], BackendResponse] | None = None,
) -> ValidationVerdict:
    """extract -> detect refusal -> consistency check; emulator text is the
    fallback of last resort, so a verdict always exists."""
    policy = policy or GuardrailPolicy()
    reasons: list[str] = []
    verdict = "pass"

    # The emulator is the oracle: its text is trusted content (braces and
    # indentation included), so only the refusal scan applies.
    from .backends import BackendKind

    if response.backend_kind == BackendKind.EMULATOR:
        refused, _ = detect_break_character(
            response.raw_text, policy.refusal_phrases
        )
        if refused:
            return ValidationVerdict(
                "fell_back", ["break_character"], expected.rendered_output
            )
        return ValidationVerdict("pass", [], response.raw_text)

    text, had_prose = extract_terminal_block(response.raw_text)
    if had_prose:
        reasons.append("meta_commentary")
        verdict = "repaired"

    refused, _phrase = detect_break_character(text, policy.refusal_phrases)
    attempts = 0
    while refused and regenerate is not None and attempts < policy.max_regenerations:
        attempts += 1
        retry = regenerate()
        text, had_prose = extract_terminal_block(retry.raw_text)
        if had_prose and "meta_commentary" not in reasons:
            reasons.append("meta_commentary")
        refused, _phrase = detect_break_character(text, policy.refusal_phrases)
        if not refused:
            verdict = "regenerated"
    if refused:
        reasons.append("break_character")
        return ValidationVerdict("fell_back", reasons, expected.rendered_output)

    if policy.strip_meta_spans:
        text, had_meta = strip_meta_spans(text)
        if had_meta:
            reasons.append("meta_commentary")
            if verdict == "pass":
                verdict = "repaired"

    if policy.check_consistency:
        consistent, mismatches = check_state_consistency(text, expected)
        if not consistent:
            reasons.append("state_inconsistent")
            return ValidationVerdict("fell_back", reasons, expected.rendered_output)

    if verdict == "pass":
        reasons = []
    return ValidationVerdict(verdict, reasons, text)

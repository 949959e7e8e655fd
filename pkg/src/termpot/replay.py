"""Transcript fixture replay: feed recorded attacker turns through a backend
and score the output against expectations.

Template mode masks volatile fields (dates, serial numbers, latencies,
transfer rates) behind named placeholders so incidental values never count
against fidelity. Replaying the committed corpus against the emulator backend
is the build's definition-of-done check.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from pathlib import Path

import yaml

from .backends import EmulatorBackend
from .config import Config
from .guardrail import GuardrailPolicy
from .personas import PersonaRegistry, seed_shadow_state
from .session import open_session, run_turn
from .shadowstate import Mode, VirtualClock

log = logging.getLogger(__name__)

PLACEHOLDER_PATTERNS = {
    "MS": r"\d+",
    "NUM": r"[\d,]+",
    "FLOAT": r"[\d.]+",
    "DATE": r"\d{2}/\d{2}/\d{4}",
    "TIME12": r"\d{2}:\d{2} [AP]M",
    "DATETIME": r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}(?::\d{2})?",
    "SERIAL": r"[0-9A-Za-z]{4,5}-[0-9A-Za-z]{4,5}",
    "RATE": r"[\d.]+ [KMG]B/s",
    "ANY": r"[^\n]*",
}

PLACEHOLDER_RE = re.compile(r"\{\{([A-Z0-9_]+)\}\}")


def template_to_regex(expected: str) -> re.Pattern:
    parts: list[str] = []
    pos = 0
    for match in PLACEHOLDER_RE.finditer(expected):
        parts.append(re.escape(expected[pos : match.start()]))
        parts.append(PLACEHOLDER_PATTERNS.get(match.group(1), r"[^\n]*"))
        pos = match.end()
    parts.append(re.escape(expected[pos:]))
    return re.compile("^" + "".join(parts) + "$")


def _normalize_ws(text: str) -> str:
    return "\n".join(re.sub(r"[ \t]+", " ", ln).strip() for ln in text.splitlines())


def match_turn(
    expected: str, actual: str, match_mode: str = "exact", normalize_ws: bool = False
) -> bool:
    if normalize_ws:
        expected = _normalize_ws(expected)
        actual = _normalize_ws(actual)
    if match_mode == "template":
        return template_to_regex(expected).match(actual) is not None
    return expected == actual


@dataclass
class FixtureTurn:
    input: str
    expected: str
    match_mode: str = "exact"
    normalize_ws: bool = False


@dataclass
class Fixture:
    fixture_id: str
    persona_id: str
    turns: list[FixtureTurn]
    clock: str | None = None
    notes: str = ""

    @property
    def deterministic(self) -> bool:
        return all(t.match_mode == "exact" for t in self.turns)


@dataclass
class FixtureResult:
    fixture_id: str
    turns_total: int
    turns_exact: int
    turns_template_match: int
    refusals_detected: int
    fell_back: int
    deterministic: bool
    mismatches: list[str] = field(default_factory=list)

    @property
    def matched(self) -> int:
        return self.turns_exact + self.turns_template_match


@dataclass
class ReplayReport:
    per_fixture: list[FixtureResult] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def turns_total(self) -> int:
        return sum(r.turns_total for r in self.per_fixture)

    @property
    def turns_matched(self) -> int:
        return sum(r.matched for r in self.per_fixture)

    @property
    def aggregate_fidelity(self) -> float:
        total = self.turns_total
        if total == 0:
            return 1.0  # vacuous corpus; caller warns
        return self.turns_matched / total

    @property
    def deterministic_fidelity(self) -> float:
        det = [r for r in self.per_fixture if r.deterministic]
        total = sum(r.turns_total for r in det)
        if total == 0:
            return 1.0
        return sum(r.matched for r in det) / total

    def render(self) -> str:
        lines = []
        for result in self.per_fixture:
            lines.append(
                f"{result.fixture_id}: {result.matched}/{result.turns_total} matched "
                f"(exact={result.turns_exact}, template={result.turns_template_match}, "
                f"refusals={result.refusals_detected}, fell_back={result.fell_back})"
            )
            for mismatch in result.mismatches[:3]:
                lines.append(f"  mismatch: {mismatch}")
        for error in self.errors:
            lines.append(f"error: {error}")
        lines.append(f"aggregate_fidelity: {self.aggregate_fidelity:.4f}")
        lines.append(f"deterministic_fidelity: {self.deterministic_fidelity:.4f}")
        return "\n".join(lines)


def builtin_corpus_dir() -> Path:
    return Path(resources.files("termpot") / "fixtures")


def load_fixture(path: Path) -> Fixture:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "persona_id" not in doc or "turns" not in doc:
        raise ValueError(f"{path.name}: not a transcript fixture")
    turns = []
    for i, raw in enumerate(doc["turns"]):
        if "input" not in raw or "expected" not in raw:
            raise ValueError(f"{path.name} turn {i}: needs input and expected")
        turns.append(
            FixtureTurn(
                input=str(raw["input"]),
                expected=str(raw["expected"]),
                match_mode=raw.get("match_mode", "exact"),
                normalize_ws=bool(raw.get("normalize_ws", False)),
            )
        )
    return Fixture(
        fixture_id=doc.get("fixture_id", path.stem),
        persona_id=doc["persona_id"],
        turns=turns,
        clock=doc.get("clock"),
        notes=doc.get("notes", ""),
    )


def load_corpus(corpus_dir: Path) -> tuple[list[Fixture], list[str]]:
    fixtures: list[Fixture] = []
    errors: list[str] = []
    for path in sorted(corpus_dir.glob("*.yaml")):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
            if isinstance(doc, dict) and doc.get("kind") == "refusal_corpus":
                continue  # consumed by the guardrail suite, not replay
            fixtures.append(load_fixture(path))
        except Exception as exc:
            errors.append(f"{path.name}: {exc}")
    return fixtures, errors


def load_refusal_corpus(corpus_dir: Path) -> list[dict]:
    for path in sorted(corpus_dir.glob("*.yaml")):
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        if isinstance(doc, dict) and doc.get("kind") == "refusal_corpus":
            return list(doc.get("passages", []))
    return []


def replay_fixture(
    fixture: Fixture,
    registry: PersonaRegistry,
    backend_factory,
    token_budget: int = 8000,
    policy: GuardrailPolicy | None = None,
    rng_seed: int = 1337,
) -> FixtureResult:
    persona = registry.get(fixture.persona_id)
    clock = VirtualClock(datetime.fromisoformat(fixture.clock)) if fixture.clock else None
    state = seed_shadow_state(persona, mode=Mode.REPLAY, clock=clock, rng_seed=rng_seed)
    session = open_session(
        persona,
        state,
        backend_factory(),
        mode=Mode.REPLAY,
        token_budget=token_budget,
        policy=policy,
    )
    result = FixtureResult(
        fixture_id=fixture.fixture_id,
        turns_total=len(fixture.turns),
        turns_exact=0,
        turns_template_match=0,
        refusals_detected=0,
        fell_back=0,
        deterministic=fixture.deterministic,
    )
    for i, turn in enumerate(fixture.turns):
        outcome = run_turn(session, turn.input)
        actual = outcome.final_text if outcome is not None else ""
        if outcome is not None:
            if "break_character" in outcome.verdict.reasons:
                result.refusals_detected += 1
            if outcome.fell_back_to_emulator:
                result.fell_back += 1
        if match_turn(turn.expected, actual, turn.match_mode, turn.normalize_ws):
            if turn.match_mode == "template":
                result.turns_template_match += 1
            else:
                result.turns_exact += 1
        else:
            result.mismatches.append(
                f"turn {i} ({turn.input[:40]!r}): expected "
                f"{turn.expected[:60]!r}, got {actual[:60]!r}"
            )
    return result


def run_replay(
    config: Config,
    corpus_dir: Path | str,
    registry: PersonaRegistry,
    backend_override: str | None = None,
) -> ReplayReport:
    corpus_dir = Path(corpus_dir)
    fixtures, errors = load_corpus(corpus_dir)
    report = ReplayReport(errors=errors)
    kind = backend_override or config.backend.kind
    if kind == "emulator":
        backend_factory = lambda: EmulatorBackend(registry)  # noqa: E731
    else:
        from .backends import RemoteLLMBackend

        backend_factory = lambda: RemoteLLMBackend(  # noqa: E731
            endpoint=config.backend.endpoint,
            model=config.backend.model,
            api_key_env=config.backend.api_key_env,
            timeout_s=config.backend.timeout_s,
            auto_continue=config.backend.auto_continue,
        )
    policy = GuardrailPolicy()
    if config.refusal_phrases:
        policy.refusal_phrases = list(config.refusal_phrases)
    for fixture in fixtures:
        try:
            report.per_fixture.append(
                replay_fixture(
                    fixture,
                    registry,
                    backend_factory,
                    token_budget=config.token_budget,
                    policy=policy,
                    rng_seed=config.session.rng_seed,
                )
            )
        except Exception as exc:
            report.errors.append(f"{fixture.fixture_id}: {exc}")
    if not fixtures:
        log.warning("replay corpus %s contains no fixtures", corpus_dir)
    return report

from __future__ import annotations

from termpot.backends import BackendKind, BackendResponse, BackendUnavailable, EmulatorBackend
from termpot.eventlog import EventLogWriter, query_logs
from termpot.personas import seed_shadow_state
from termpot.session import SessionStatus, close_session, open_session, run_turn
from termpot.shadowstate import Mode
from termpot.ttp import Tactic


class ScriptedBackend:
    """Remote-looking backend that replays a canned list of raw texts."""

    kind = BackendKind.REMOTE_LLM

    def __init__(self, texts, fail_first=0):
        self.texts = list(texts)
        self.fail_first = fail_first
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        if self.calls <= self.fail_first:
            raise BackendUnavailable("scripted outage")
        text = self.texts.pop(0) if self.texts else ""
        return BackendResponse(text, 1, self.kind)

    def health(self):
        from termpot.backends import HealthStatus

        return HealthStatus.HEALTHY


def make_session(registry, persona_id="linux_term", backend=None, sink=None, **kwargs):
    persona = registry.get(persona_id)
    state = seed_shadow_state(persona)
    return open_session(
        persona,
        state,
        backend or EmulatorBackend(registry),
        mode=kwargs.pop("mode", Mode.REPLAY),
        sink=sink,
        **kwargs,
    )


def test_basic_turn_and_counters(registry):
    session = make_session(registry)
    result = run_turn(session, "pwd")
    assert result.final_text == "/home/user"
    assert session.turn_index == 1
    result = run_turn(session, "ls")
    assert session.turn_index == 2
    assert "Videos/" in result.final_text


def test_empty_input_is_promptless_noop(registry):
    session = make_session(registry)
    before = session.state.all_paths()
    assert run_turn(session, "   ") is None
    assert session.turn_index == 0
    assert session.state.all_paths() == before


def test_context_accumulates_turns(registry):
    session = make_session(registry)
    run_turn(session, "pwd")
    run_turn(session, "ls")
    roles = [e.role for e in session.context.entries]
    assert roles == ["instruction", "attacker", "honeypot", "attacker", "honeypot"]


def test_backend_outage_falls_back_to_emulator(registry, tmp_path):
    sink = EventLogWriter(str(tmp_path / "log.jsonl"))
    backend = ScriptedBackend([], fail_first=99)
    session = make_session(registry, backend=backend, sink=sink)
    result = run_turn(session, "pwd")
    assert result.final_text == "/home/user"
    assert result.backend_kind == BackendKind.EMULATOR
    assert result.fell_back_to_emulator
    records, _ = query_logs(str(tmp_path / "log.jsonl"))
    kinds = [r.get("event") for r in records]
    assert "backend_degraded" in kinds
    turn_records = [r for r in records if "input" in r]
    assert turn_records[0]["backend"] == "emulator_fallback"


def test_refusing_backend_regenerates_then_falls_back(registry):
    backend = ScriptedBackend(
        ["I'm sorry, I can't execute that.", "I'm sorry, truly."]
    )
    session = make_session(registry, backend=backend)
    result = run_turn(session, "pwd")
    assert result.final_text == "/home/user"
    assert result.verdict.verdict == "fell_back"
    assert backend.calls == 2  # original + one regeneration


def test_refusal_then_recovery_is_regenerated(registry):
    backend = ScriptedBackend(
        ["I'm sorry, I can't execute that.", "```\n/home/user\n```"]
    )
    session = make_session(registry, backend=backend)
    result = run_turn(session, "pwd")
    assert result.verdict.verdict == "regenerated"
    assert result.final_text == "/home/user"


def test_remote_inconsistency_prefers_shadow_state(registry):
    # the scripted model lists a file the shadow FS never had
    backend = ScriptedBackend(["Desktop/\nDocuments/\nloot.zip"])
    session = make_session(registry, backend=backend)
    result = run_turn(session, "ls")
    assert "loot.zip" not in result.final_text
    assert result.verdict.verdict == "fell_back"
    assert "state_inconsistent" in result.verdict.reasons


def test_meta_channel_replay_vs_serve(registry):
    replay_session = make_session(registry, mode=Mode.REPLAY)
    result = run_turn(replay_session, "{operator checking in}")
    assert result.final_text == ""
    assert replay_session.turn_index == 0  # not a real exchange

    serve_persona = registry.get("linux_term")
    serve_state = seed_shadow_state(serve_persona, mode=Mode.SERVE)
    serve_session = open_session(
        serve_persona, serve_state, EmulatorBackend(registry), mode=Mode.SERVE
    )
    result = run_turn(serve_session, "{operator checking in}")
    assert "command not found" in result.final_text
    assert serve_session.turn_index == 1


def test_serve_mode_scrubs_braces_from_remote_requests(registry):
    captured = {}

    class CapturingBackend(ScriptedBackend):
        def complete(self, request):
            captured["entries"] = request.context_entries
            return super().complete(request)

    backend = CapturingBackend(["/home/user"])
    persona = registry.get("linux_term")
    state = seed_shadow_state(persona, mode=Mode.SERVE)
    session = open_session(persona, state, backend, mode=Mode.SERVE)
    run_turn(session, "pwd {please be nice}")
    joined = "\n".join(text for _, text in captured["entries"])
    assert "{" not in joined and "}" not in joined
    assert "please be nice" not in joined


def test_turn_events_logged_with_tactics(registry, tmp_path):
    sink = EventLogWriter(str(tmp_path / "log.jsonl"))
    session = make_session(registry, persona_id="dos_arp", sink=sink)
    run_turn(session, "arp -s 224.0.0.2 00-11-22-33-44-55")
    records, _ = query_logs(str(tmp_path / "log.jsonl"), tactic="SPOOFING")
    assert len(records) == 1
    assert records[0]["input"] == "arp -s 224.0.0.2 00-11-22-33-44-55"
    assert records[0]["turn_index"] == 0


def test_close_session_summary_and_idempotence(registry, tmp_path):
    sink = EventLogWriter(str(tmp_path / "log.jsonl"))
    session = make_session(registry, persona_id="dos_arp", sink=sink)
    for cmd in ("dir", "arp -a", "arp -s 224.0.0.2 00-11-22-33-44-55", "arp -a"):
        run_turn(session, cmd)
    summary = close_session(session, cause="peer_disconnect")
    assert summary.turn_count == 4
    assert summary.tactic_histogram.get(Tactic.SPOOFING.value, 0) >= 1
    assert session.status == SessionStatus.CLOSED

    again = close_session(session, cause="operator")
    assert again == summary  # cached, cause unchanged
    records, _ = query_logs(str(tmp_path / "log.jsonl"))
    closes = [r for r in records if r.get("event") == "session_close"]
    assert len(closes) == 1


def test_closed_session_processes_no_turns(registry):
    session = make_session(registry)
    close_session(session)
    assert run_turn(session, "pwd") is None
    assert session.turn_index == 0


def test_zero_turn_session_summary(registry):
    session = make_session(registry)
    summary = close_session(session)
    assert summary.turn_count == 0
    assert summary.tactic_histogram == {}


def test_reset_preserves_emulator_behavior(registry):
    # tiny budget forces resets; emulator answers must not change
    budgeted = make_session(registry, token_budget=512)
    unbounded = make_session(registry, token_budget=10**9)
    script = ["pwd", "ls", "echo \"print('x')\" >a.py", "python a.py", "ls",
              "rm -rf Music", "ls", "pwd"] * 6
    out_a = [run_turn(budgeted, c).final_text for c in script]
    out_b = [run_turn(unbounded, c).final_text for c in script]
    assert out_a == out_b
    assert budgeted.context.resets_performed >= 1
    assert unbounded.context.resets_performed == 0


def test_consistent_remote_response_passes_through(registry):
    backend = ScriptedBackend(["```\n/home/user\n```"])
    session = make_session(registry, backend=backend)
    result = run_turn(session, "pwd")
    assert result.verdict.verdict == "pass"
    assert result.final_text == "/home/user"
    assert result.backend_kind == BackendKind.REMOTE_LLM
    assert not result.fell_back_to_emulator

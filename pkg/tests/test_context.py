from __future__ import annotations

import random

from termpot import emulator
from termpot.context import (
    ROLE_INSTRUCTION,
    ContextBuffer,
    build_state_digest,
    estimate_tokens,
)
from termpot.personas import PersonaRegistry, seed_shadow_state

WORDS = ["lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing"]


def test_estimate_basics():
    assert estimate_tokens("pwd") == 1
    assert estimate_tokens("") == 0
    assert estimate_tokens("abcd") == 1
    assert estimate_tokens("abcde") == 2


def test_estimate_monotone_in_length():
    rng = random.Random(7)
    last = 0
    text = ""
    for _ in range(50):
        text += rng.choice(WORDS) + " "
        est = estimate_tokens(text)
        assert est >= last
        last = est


def test_estimate_tracks_word_budget_anchor():
    # ~5600 words of prose run about 32k chars, which the chars/4 rule should
    # put within 15% of an 8000-token budget.
    lorem = [
        "lorem", "ipsum", "dolor", "sit", "amet", "elit", "sed", "magna",
        "aliqua", "tempor", "labore", "dolore", "veniam", "quis", "nostrud",
        "ullamco", "nisi", "aute", "irure", "esse",
    ]
    rng = random.Random(13)
    text = " ".join(rng.choice(lorem) for _ in range(5600))
    assert 28_000 <= len(text) <= 36_000  # sanity: prose-like word lengths
    assert 0.85 * 8000 <= estimate_tokens(text) <= 1.15 * 8000


def test_buffer_starts_with_instruction():
    buf = ContextBuffer(instruction="act as a terminal", budget=1000)
    assert buf.entries[0].role == ROLE_INSTRUCTION
    assert buf.token_estimate == estimate_tokens("act as a terminal")


def test_append_small_turn_no_reset():
    buf = ContextBuffer(instruction="inst", budget=1000)
    buf.append_turn("ls", "Desktop/")
    assert buf.resets_performed == 0
    assert buf.token_estimate == buf.recompute_estimate()


def test_reset_at_crossing_point_matches_running_sum_oracle():
    budget = 600
    instruction = "x" * 400  # 100 tokens
    turns = [("cmd%03d" % i, "out" * 40) for i in range(40)]  # 2 + 30 tokens each

    # independent oracle: running token sum finds the first crossing turn
    running = estimate_tokens(instruction)
    crossing = None
    for i, (a, h) in enumerate(turns):
        cost = estimate_tokens(a) + estimate_tokens(h)
        if running + cost > budget:
            crossing = i
            break
        running += cost
    assert crossing is not None

    buf = ContextBuffer(instruction=instruction, budget=budget)
    for i, (a, h) in enumerate(turns[: crossing + 1]):
        before = buf.resets_performed
        buf.append_turn(a, h)
        if i < crossing:
            assert buf.resets_performed == before
        else:
            assert buf.resets_performed == before + 1
        assert buf.token_estimate <= budget


def test_exact_fit_does_not_reset():
    budget = 600
    instruction = "x" * 400  # 100 tokens
    buf = ContextBuffer(instruction=instruction, budget=budget)
    # exactly the remaining 500 tokens
    buf.append_turn("a" * 400, "b" * 1600)
    assert buf.resets_performed == 0
    assert buf.token_estimate == budget


def test_oversized_single_turn_truncates():
    buf = ContextBuffer(instruction="inst", budget=550)
    buf.append_turn("go", "z" * 10_000)
    assert buf.token_estimate <= 550
    assert buf.truncations == 1


def test_budget_safety_under_random_sequences():
    rng = random.Random(99)
    buf = ContextBuffer(instruction="inst " * 20, budget=512)
    for _ in range(300):
        attacker = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 10)))
        honeypot = " ".join(rng.choice(WORDS) for _ in range(rng.randint(0, 120)))
        buf.append_turn(attacker, honeypot)
        assert buf.token_estimate <= buf.budget
        assert buf.entries[0].role == ROLE_INSTRUCTION
        assert buf.token_estimate == buf.recompute_estimate()


def test_digest_of_fresh_state_says_no_changes():
    registry = PersonaRegistry()
    state = seed_shadow_state(registry.get("linux_term"))
    assert "no changes" in build_state_digest(state)
    assert "no changes" in build_state_digest(None)


def test_digest_mentions_created_and_deleted_files():
    registry = PersonaRegistry()
    persona = registry.get("linux_term")
    state = seed_shadow_state(persona)
    for cmd in (
        "pwd", "ls", "echo \"print('Hello World!')\" >test.py", "python test.py",
        "rm -rf Videos",
    ):
        emulator.execute(state, persona, cmd)
    digest = build_state_digest(state)
    assert "test.py" in digest
    assert "Videos" in digest


def test_two_consecutive_resets_produce_identical_digest_entries():
    registry = PersonaRegistry()
    state = seed_shadow_state(registry.get("linux_term"))
    buf = ContextBuffer(instruction="inst", budget=1000)
    buf.perform_reset(state)
    first = [e.text for e in buf.entries]
    buf.perform_reset(state)
    second = [e.text for e in buf.entries]
    assert first == second
    assert len(buf.entries) == 2
    assert buf.resets_performed == 2

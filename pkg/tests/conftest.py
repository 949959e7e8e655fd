from __future__ import annotations

from datetime import datetime

import pytest

from termpot.personas import PersonaRegistry, seed_shadow_state
from termpot.shadowstate import Mode, VirtualClock


@pytest.fixture(scope="session")
def registry():
    return PersonaRegistry()


@pytest.fixture
def fresh_state(registry):
    def make(persona_id: str, clock: datetime | None = None, mode=Mode.REPLAY):
        persona = registry.get(persona_id)
        vclock = VirtualClock(clock) if clock else None
        return persona, seed_shadow_state(persona, mode=mode, clock=vclock)

    return make

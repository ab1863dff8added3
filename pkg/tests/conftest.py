from __future__ import annotations

import pytest

from reqboard.config import Config
from reqboard.engine import ForumEngine
from reqboard.model import Role
from reqboard.store import MemoryStore


class TickingClock:
    """Deterministic clock advancing a fixed step per call."""

    def __init__(self, start: float = 1_700_000_000.0, step: float = 1.0):
        self.now = start
        self.step = step

    def __call__(self) -> float:
        self.now += self.step
        return self.now


@pytest.fixture
def clock() -> TickingClock:
    return TickingClock()


@pytest.fixture
def engine(clock: TickingClock) -> ForumEngine:
    return ForumEngine(MemoryStore(), Config(), clock=clock)


@pytest.fixture
def manager(engine: ForumEngine):
    return engine.register_stakeholder("ana", "analyst-pw", Role.MANAGEMENT)


@pytest.fixture
def general(engine: ForumEngine):
    return engine.register_stakeholder("uli", "user-pw", Role.GENERAL)

import threading

import pytest

from wikigate.clock import to_iso
from wikigate.config import load_config
from wikigate.engine import WikiEngine

from datetime import datetime, timedelta, timezone

# Fast test parameters: cheap key stretching and no fsync. Durability and
# the real defaults are exercised where they are the point of the test.
FAST = {"hash_iterations": 1000, "fsync": False}

SECRET = "s3cretpw"


class ManualClock:
    """Deterministic injectable clock; thread-safe advance."""

    def __init__(self, start: str = "2024-01-01T00:00:00.000000Z"):
        self._now = datetime.fromisoformat(start.replace("Z", "+00:00"))
        self._lock = threading.Lock()

    def __call__(self) -> str:
        return to_iso(self._now)

    def advance(self, seconds: float = 1.0) -> None:
        with self._lock:
            self._now += timedelta(seconds=seconds)

    def advance_days(self, days: float) -> None:
        self.advance(days * 86400.0)


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def make_engine(tmp_path):
    """Factory for engines over fresh or reused data directories."""
    engines = []
    counter = [0]

    def factory(data_dir=None, clock=None, **overrides):
        if data_dir is None:
            counter[0] += 1
            data_dir = tmp_path / f"data{counter[0]}"
        merged = {"data_dir": str(data_dir), **FAST, **overrides}
        config = load_config(None, merged)
        engine = (
            WikiEngine(config) if clock is None else WikiEngine(config, clock=clock)
        )
        engines.append(engine)
        return engine

    yield factory
    for engine in engines:
        engine.close()


@pytest.fixture
def engine(make_engine):
    return make_engine()


def register(engine, username, moderator=False, secret=SECRET):
    record = engine.register_author(username, username.title(), "", secret)
    if moderator:
        engine.grant_moderator(username)
        record = engine.state.registry.get_by_username(username)
    return record


def login(engine, username, secret=SECRET):
    token, _expires = engine.authenticate(username, secret)
    return token


@pytest.fixture
def moderator_token(engine):
    register(engine, "mod", moderator=True)
    return login(engine, "mod")


@pytest.fixture
def contributor_token(engine):
    register(engine, "alice")
    return login(engine, "alice")

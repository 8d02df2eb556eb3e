"""Service configuration: one JSON file, overridable field by field.

Precedence: explicit override (CLI flag) > config file value > default.
Validation happens in one place, at load; a bad config refuses to load
with a message naming the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .identity import DEFAULT_ITERATIONS, ScoreParams
from .moderation import Policy

DEFAULT_LISTEN = "127.0.0.1:8642"


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    listen_address: str = DEFAULT_LISTEN
    policy: Policy = field(default_factory=Policy)
    scoring: ScoreParams = field(default_factory=ScoreParams)
    evidence_stub_path: Path | None = None
    session_ttl_hours: float = 24.0
    hash_iterations: int = DEFAULT_ITERATIONS
    fsync: bool = True

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])

    def to_dict(self) -> dict:
        return {
            "data_dir": str(self.data_dir),
            "listen_address": self.listen_address,
            "policy": self.policy.to_dict(),
            "scoring": self.scoring.to_dict(),
            "evidence_stub_path": (
                str(self.evidence_stub_path) if self.evidence_stub_path else None
            ),
            "session_ttl_hours": self.session_ttl_hours,
            "hash_iterations": self.hash_iterations,
            "fsync": self.fsync,
        }


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ServiceConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        except ValueError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"config {path} must hold a JSON object")
    data.update(overrides or {})

    if "data_dir" not in data:
        raise ValidationError("config needs a data_dir")

    listen = str(data.get("listen_address", DEFAULT_LISTEN))
    if ":" not in listen:
        raise ValidationError(f"listen_address must be host:port, got {listen!r}")
    try:
        port = int(listen.rsplit(":", 1)[1])
    except ValueError as exc:
        raise ValidationError(f"listen_address port is not a number: {listen!r}") from exc
    if not 0 <= port <= 65535:
        raise ValidationError(f"listen_address port out of range: {port}")

    try:
        policy = Policy.from_dict(data.get("policy", {}))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad policy block: {exc}") from exc

    try:
        scoring = ScoreParams.from_dict(data.get("scoring", {}))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad scoring block: {exc}") from exc

    ttl = float(data.get("session_ttl_hours", 24.0))
    if ttl <= 0:
        raise ValidationError("session_ttl_hours must be positive")

    iterations = int(data.get("hash_iterations", DEFAULT_ITERATIONS))
    if iterations < 1:
        raise ValidationError("hash_iterations must be at least 1")

    stub = data.get("evidence_stub_path")
    return ServiceConfig(
        data_dir=Path(data["data_dir"]),
        listen_address=listen,
        policy=policy,
        scoring=scoring,
        evidence_stub_path=Path(stub) if stub else None,
        session_ttl_hours=ttl,
        hash_iterations=iterations,
        fsync=bool(data.get("fsync", True)),
    )

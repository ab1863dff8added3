"""Service configuration: plain key = value file with environment overrides.

Unknown keys and malformed values are rejected outright so a bad deployment
fails at startup, not mid-request. REQBOARD_LISTEN and REQBOARD_STORAGE
override the listen address and storage path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_LISTEN = "REQBOARD_LISTEN"
ENV_STORAGE = "REQBOARD_STORAGE"


@dataclass(frozen=True)
class Config:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    storage_path: str | None = None  # None runs on the in-memory store
    ngram_size: int = 3
    dedup_threshold: float = 0.6
    auto_open: bool = False
    score_per_post: int = 1
    score_per_vote: int = 1
    score_per_response: int = 1
    reputation_per_accept: int = 1
    reputation_per_lock: int = 1
    session_ttl_seconds: int = 3600

    def validate(self) -> None:
        if not (0 < self.dedup_threshold <= 1):
            raise ValueError(
                f"dedup_threshold must be in (0, 1], got {self.dedup_threshold}"
            )
        if self.ngram_size < 1:
            raise ValueError(f"ngram_size must be >= 1, got {self.ngram_size}")
        if self.session_ttl_seconds <= 0:
            raise ValueError("session_ttl_seconds must be positive")
        if not (0 < self.listen_port < 65536):
            raise ValueError(f"listen_port out of range: {self.listen_port}")
        for name in (
            "score_per_post",
            "score_per_vote",
            "score_per_response",
            "reputation_per_accept",
            "reputation_per_lock",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_doc(self) -> dict:
        return {
            "listen": f"{self.listen_host}:{self.listen_port}",
            "storage": self.storage_path,
            "dedup": {"ngram_size": self.ngram_size, "threshold": self.dedup_threshold},
            "auto_open": self.auto_open,
            "scoring": {
                "per_post": self.score_per_post,
                "per_vote": self.score_per_vote,
                "per_response": self.score_per_response,
            },
            "reputation": {
                "per_accepted_answer": self.reputation_per_accept,
                "per_lock": self.reputation_per_lock,
            },
            "session_ttl_seconds": self.session_ttl_seconds,
        }


_BOOL_WORDS = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}

_INT_KEYS = {
    "ngram_size",
    "score_per_post",
    "score_per_vote",
    "score_per_response",
    "reputation_per_accept",
    "reputation_per_lock",
    "session_ttl_seconds",
}


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep:
        raise ValueError(f"listen must look like host:port, got {value!r}")
    return host, int(port)


def parse_config(text: str) -> Config:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        if key == "listen":
            values["listen_host"], values["listen_port"] = _parse_listen(value)
        elif key == "storage":
            values["storage_path"] = value or None
        elif key == "dedup_threshold":
            values["dedup_threshold"] = float(value)
        elif key == "auto_open":
            if value.lower() not in _BOOL_WORDS:
                raise ValueError(f"line {lineno}: auto_open must be true/false, got {value!r}")
            values["auto_open"] = _BOOL_WORDS[value.lower()]
        elif key in _INT_KEYS:
            values[key] = int(value)
        else:
            known = sorted(f.name for f in fields(Config))
            raise ValueError(f"line {lineno}: unknown key {key!r} (known: listen, storage, dedup_threshold, auto_open, {', '.join(k for k in known if k in _INT_KEYS)})")
    return Config(**values)  # type: ignore[arg-type]


def load_config(path: str | os.PathLike[str] | None = None) -> Config:
    """Read and validate configuration, applying environment overrides."""
    cfg = parse_config(Path(path).read_text(encoding="utf-8")) if path else Config()
    if os.environ.get(ENV_LISTEN):
        host, port = _parse_listen(os.environ[ENV_LISTEN])
        cfg = Config(**{**_asdict(cfg), "listen_host": host, "listen_port": port})
    if os.environ.get(ENV_STORAGE):
        cfg = Config(**{**_asdict(cfg), "storage_path": os.environ[ENV_STORAGE]})
    cfg.validate()
    return cfg


def _asdict(cfg: Config) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(Config)}

"""Narrow persistence seam: namespaced JSON documents with compare-and-set.

A batch of operations applies atomically: every precondition is checked
first, then all writes land together (and, for the file-backed store, reach
disk via write-to-temp + rename before memory is updated). A crash or a
failed precondition therefore leaves no partial state behind.
"""

from __future__ import annotations

import copy
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .errors import ForumError


@dataclass(frozen=True)
class Versioned:
    value: dict[str, Any]
    version: int


@dataclass(frozen=True)
class PutOp:
    """Write ``value`` at (ns, key).

    ``expected`` None means the key must not exist yet (insert); an integer
    means the stored version must match (compare-and-set update).
    """

    ns: str
    key: str
    value: dict[str, Any]
    expected: int | None = None


@dataclass(frozen=True)
class DeleteOp:
    ns: str
    key: str
    expected: int


class MemoryStore:
    """In-memory store; also the base for the file-backed variant."""

    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._data: dict[str, dict[str, Versioned]] = {}

    def get(self, ns: str, key: str) -> Versioned | None:
        with self._lock:
            rec = self._data.get(ns, {}).get(key)
            if rec is None:
                return None
            return Versioned(copy.deepcopy(rec.value), rec.version)

    def scan(self, ns: str) -> dict[str, Versioned]:
        """Snapshot of a whole namespace, keyed by document key."""
        with self._lock:
            return {
                key: Versioned(copy.deepcopy(rec.value), rec.version)
                for key, rec in self._data.get(ns, {}).items()
            }

    def namespaces(self) -> list[str]:
        with self._lock:
            return sorted(self._data)

    def apply(self, ops: Sequence[PutOp | DeleteOp]) -> None:
        """Apply a batch atomically; raises STALE_VERSION and writes nothing
        if any precondition fails."""
        with self._lock:
            for op in ops:
                current = self._data.get(op.ns, {}).get(op.key)
                if isinstance(op, DeleteOp) or op.expected is not None:
                    expected = op.expected
                    if current is None:
                        raise ForumError(
                            "STALE_VERSION",
                            f"{op.ns}/{op.key} vanished under a concurrent writer",
                        )
                    if current.version != expected:
                        raise ForumError(
                            "STALE_VERSION",
                            f"{op.ns}/{op.key} is at version {current.version}, "
                            f"caller expected {expected}",
                        )
                elif current is not None:
                    raise ForumError(
                        "STALE_VERSION", f"{op.ns}/{op.key} already exists"
                    )

            new_data = dict(self._data)
            for op in ops:
                space = dict(new_data.get(op.ns, {}))
                if isinstance(op, DeleteOp):
                    del space[op.key]
                else:
                    version = 1 if op.expected is None else op.expected + 1
                    space[op.key] = Versioned(copy.deepcopy(op.value), version)
                new_data[op.ns] = space
            self._persist(new_data)
            self._data = new_data

    def _persist(self, data: dict[str, dict[str, Versioned]]) -> None:
        """Hook for durable variants; runs before the in-memory swap."""


class FileStore(MemoryStore):
    """Single-file JSON store committed by atomic rename.

    Each batch rewrites the snapshot to ``<path>.tmp`` and renames it over
    the live file, so an interrupted commit leaves the previous snapshot
    fully intact.
    """

    FORMAT_VERSION = 1

    def __init__(self, path: str | os.PathLike[str]) -> None:
        super().__init__()
        self.path = Path(path)
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        raw = json.loads(self.path.read_text(encoding="utf-8"))
        if raw.get("format") != self.FORMAT_VERSION:
            raise ValueError(f"unsupported store format in {self.path}")
        self._data = {
            ns: {key: Versioned(rec["value"], rec["version"]) for key, rec in space.items()}
            for ns, space in raw["data"].items()
        }

    def _persist(self, data: dict[str, dict[str, Versioned]]) -> None:
        snapshot = {
            "format": self.FORMAT_VERSION,
            "data": {
                ns: {key: {"version": rec.version, "value": rec.value} for key, rec in space.items()}
                for ns, space in data.items()
            },
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(snapshot, fh, ensure_ascii=False, separators=(",", ":"))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)


def open_store(storage_path: str | None) -> MemoryStore:
    return FileStore(storage_path) if storage_path else MemoryStore()

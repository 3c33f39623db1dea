"""Content-addressed score cache backed by SQLite."""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
import time
from pathlib import Path

CACHE_FILENAME = "scores.sqlite"


def score_key(model: str, media_id: str, frame_index: int, prompt_digest: str, raw_pa: bool) -> str:
    ident = json.dumps([model, media_id, int(frame_index), prompt_digest, bool(raw_pa)], separators=(",", ":"))
    return hashlib.sha256(ident.encode("utf-8")).hexdigest()


class ScoreCache:
    """Thread-safe ``key -> (score, degraded)`` store.

    ``path`` may be a directory (the database file is created inside it), a
    file path, or ``None`` for an in-memory cache.
    """

    def __init__(self, path: str | Path | None = None):
        if path is None:
            target = ":memory:"
        else:
            path = Path(path)
            if path.suffix != ".sqlite":
                path.mkdir(parents=True, exist_ok=True)
                path = path / CACHE_FILENAME
            else:
                path.parent.mkdir(parents=True, exist_ok=True)
            target = str(path)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(target, check_same_thread=False, isolation_level=None)
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS scores ("
            " key TEXT PRIMARY KEY, score REAL NOT NULL, degraded INTEGER NOT NULL, created REAL NOT NULL)"
        )
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> tuple[float, bool] | None:
        with self._lock:
            row = self._conn.execute("SELECT score, degraded FROM scores WHERE key = ?", (key,)).fetchone()
            if row is None:
                self.misses += 1
                return None
            self.hits += 1
        return float(row[0]), bool(row[1])

    def put(self, key: str, score: float, degraded: bool) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO scores (key, score, degraded, created) VALUES (?, ?, ?, ?)",
                (key, float(score), int(degraded), time.time()),
            )

    def __len__(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM scores").fetchone()[0]

    def close(self) -> None:
        with self._lock:
            self._conn.close()

"""Persistent response cache: one append-only UTF-8 record file per host.

Each line is a JSON record {host, text, fetched_at, body}; the latest record
for a (host, text) key wins. Entries older than the TTL read as misses but
are never deleted, keeping files strictly append-only.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from pathlib import Path
from typing import Callable

DEFAULT_TTL = 7 * 24 * 3600.0  # wiki content is slow-moving

_SAFE = re.compile(r"[^A-Za-z0-9.-]+")


class FileCache:
    def __init__(
        self,
        directory: str | os.PathLike,
        ttl: float = DEFAULT_TTL,
        clock: Callable[[], float] = time.time,
    ):
        self.directory = Path(directory)
        self.ttl = ttl
        self.clock = clock
        self._lock = threading.Lock()
        self._index: dict[str, dict[str, tuple[float, str]]] = {}

    def _path(self, host: str) -> Path:
        return self.directory / (_SAFE.sub("_", host) + ".jsonl")

    def _load(self, host: str) -> dict[str, tuple[float, str]]:
        entries = self._index.get(host)
        if entries is not None:
            return entries
        entries = {}
        path = self._path(host)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    entries[record["text"]] = (record["fetched_at"], record["body"])
        self._index[host] = entries
        return entries

    def get(self, host: str, text: str) -> str | None:
        """Return the cached body, or None on a miss or an expired entry."""
        with self._lock:
            hit = self._load(host).get(text)
        if hit is None:
            return None
        fetched_at, body = hit
        if self.clock() - fetched_at > self.ttl:
            return None
        return body

    def put(self, host: str, text: str, body: str) -> None:
        fetched_at = self.clock()
        record = json.dumps(
            {"host": host, "text": text, "fetched_at": fetched_at, "body": body},
            ensure_ascii=False,
        )
        with self._lock:
            self._load(host)[text] = (fetched_at, body)
            self.directory.mkdir(parents=True, exist_ok=True)
            with open(self._path(host), "a", encoding="utf-8") as fh:
                fh.write(record + "\n")

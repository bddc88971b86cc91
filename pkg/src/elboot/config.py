"""Tool configuration: JSON file, flag, or environment variable.

Lookup order: explicit --config path, then $ELBOOT_CONFIG, then defaults.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

ENV_VAR = "ELBOOT_CONFIG"


@dataclass
class Config:
    data_dir: str = "elboot-data"
    hosts: list[str] = field(default_factory=lambda: ["is.wikipedia.org", "en.wikipedia.org"])
    preferred_languages: list[str] = field(default_factory=lambda: ["is", "en"])
    search_limit: int = 10
    cache_ttl_seconds: float = 7 * 24 * 3600.0
    rate_limit_per_host: float = 2.0
    context_window_chars: int = 256
    max_candidates: int = 10
    generator_fanout: int = 4
    generator_timeout_seconds: float = 30.0
    lease_ttl_seconds: float = 600.0
    snapshot_every: int = 200
    doc_marker: str = "# newdoc"
    collapse_threshold: int = 5
    skew_subcategories: list[str] = field(default_factory=lambda: ["adjudications"])
    auth_token: str | None = None

    @property
    def journal_path(self) -> Path:
        return Path(self.data_dir) / "journal.jsonl"

    @property
    def cache_dir(self) -> Path:
        return Path(self.data_dir) / "cache"

    @property
    def snapshot_dir(self) -> Path:
        return Path(self.data_dir) / "snapshots"


def load_config(path: str | os.PathLike | None = None) -> Config:
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return Config()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    known = {f.name for f in fields(Config)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return Config(**data)

from __future__ import annotations

import json
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

from elboot.corpus import Mention

DATA_DIR = Path(__file__).parent / "data"


def make_mention(
    mention_id: str,
    surface: str = "Halldór Laxness",
    ne_type: str = "Person",
    doc_id: str = "doc1",
    left: str = "skáldið",
    right: str = "fékk verðlaunin",
    morph_tags: tuple = (None, None),
) -> Mention:
    return Mention(
        id=mention_id,
        doc_id=doc_id,
        sentence_index=0,
        token_span=(1, 1 + len(surface.split())),
        surface=surface,
        ne_type=ne_type,
        left_context=left,
        right_context=right,
        morph_tags=morph_tags,
    )


class RecordedTransport:
    """Replays recorded API bodies keyed by host + query parameter.

    opensearch URLs are keyed on `search`, pageprops URLs on `titles`;
    anything unrecorded is a hard test failure.
    """

    def __init__(self, fixtures: dict[str, dict[str, str]]):
        self.fixtures = fixtures
        self.calls: list[str] = []

    def get(self, url: str, timeout: float = 0.0) -> tuple[int, str]:
        self.calls.append(url)
        parsed = urlparse(url)
        params = parse_qs(parsed.query)
        if params.get("action") == ["opensearch"]:
            key = params["search"][0]
        else:
            key = params["titles"][0]
        host_fixtures = self.fixtures.get(parsed.netloc)
        if host_fixtures is None or key not in host_fixtures:
            raise KeyError(f"no recorded response for {parsed.netloc} {key!r}")
        return 200, host_fixtures[key]


@pytest.fixture(scope="session")
def opensearch_fixtures() -> dict:
    with open(DATA_DIR / "recorded_opensearch.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def pageprops_fixtures() -> dict:
    with open(DATA_DIR / "recorded_pageprops.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture
def opensearch_transport(opensearch_fixtures) -> RecordedTransport:
    return RecordedTransport(opensearch_fixtures)


@pytest.fixture
def pageprops_transport(pageprops_fixtures) -> RecordedTransport:
    return RecordedTransport(pageprops_fixtures)

"""Resolve (language, page title) pairs to Wikidata QIDs via the wiki's own
query API, following redirects to the canonical page. Works online against
live wikis and offline against a warm cache; NotFound is an ordinary value,
distinct from transport-level resolution errors.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass
from typing import Callable

from .cache import FileCache
from .transport import (
    DEFAULT_BACKOFF_BASE,
    DEFAULT_HTTP_TIMEOUT,
    DEFAULT_RETRIES,
    TransportError,
    fetch_with_retries,
)
from .wapis import _percent_encode

logger = logging.getLogger(__name__)

QID_RE = re.compile(r"^Q[0-9]+$")


class ResolutionError(RuntimeError):
    """Transport or API failure after retries; not the same as NotFound."""


@dataclass(frozen=True)
class ResolvedEntity:
    qid: str
    canonical_title: str
    language: str
    redirected_from: str | None = None

    def __post_init__(self):
        if not QID_RE.match(self.qid):
            raise ValueError(f"malformed qid {self.qid!r}")
        if not self.canonical_title:
            raise ValueError("canonical_title must be non-empty")

    def to_dict(self) -> dict:
        out = {"qid": self.qid, "canonical_title": self.canonical_title, "language": self.language}
        if self.redirected_from is not None:
            out["redirected_from"] = self.redirected_from
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ResolvedEntity":
        return cls(
            qid=data["qid"],
            canonical_title=data["canonical_title"],
            language=data["language"],
            redirected_from=data.get("redirected_from"),
        )


@dataclass(frozen=True)
class NotFound:
    """No page (or no Wikidata item) for the queried title."""

    language: str
    title: str


def normalize_title(title: str) -> str:
    """MediaWiki title convention: underscores are spaces, first letter upper."""
    cleaned = " ".join(title.replace("_", " ").split())
    if not cleaned:
        return cleaned
    return cleaned[0].upper() + cleaned[1:]


def build_query_url(language: str, title: str) -> str:
    host = f"{language}.wikipedia.org"
    return (
        f"https://{host}/w/api.php?action=query&prop=pageprops&ppprop=wikibase_item"
        f"&redirects=1&format=json&titles={_percent_encode(title)}"
    )


def resolve(
    language: str,
    title: str,
    cache: FileCache | None,
    transport,
    limiter=None,
    http_timeout: float = DEFAULT_HTTP_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    sleep: Callable[[float], None] = time.sleep,
) -> ResolvedEntity | NotFound:
    """Resolve one (language, title) pair, cache-first.

    Raises ResolutionError when the wiki cannot be queried; returns NotFound
    when it answers that no such page (or no linked item) exists.
    """
    if not title:
        raise ValueError("title must be non-empty")
    normalized = normalize_title(title)
    host = f"{language}.wikipedia.org"
    body: str | None = cache.get(host, normalized) if cache is not None else None
    if body is None:
        url = build_query_url(language, normalized)
        if limiter is not None:
            limiter.acquire(host)
        try:
            status, body = fetch_with_retries(
                transport, url, timeout=http_timeout, retries=retries,
                backoff_base=backoff_base, sleep=sleep,
            )
        except TransportError as exc:
            raise ResolutionError(f"{host} unreachable for {normalized!r}: {exc}") from exc
        if status != 200:
            raise ResolutionError(f"{host} answered HTTP {status} for {normalized!r}")
        if cache is not None:
            cache.put(host, normalized, body)
    return _parse_pageprops(body, language, normalized)


def _parse_pageprops(body: str, language: str, queried_title: str) -> ResolvedEntity | NotFound:
    try:
        data = json.loads(body)
        pages = data["query"]["pages"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ResolutionError(f"unexpected API response for {queried_title!r}: {exc}") from exc
    redirected = any(
        r.get("from") == queried_title for r in data["query"].get("redirects", [])
    )
    for page_id, page in pages.items():
        if page_id == "-1" or "missing" in page:
            return NotFound(language=language, title=queried_title)
        qid = page.get("pageprops", {}).get("wikibase_item")
        if qid is None or not QID_RE.match(qid):
            if qid is not None:
                logger.warning("ignoring malformed wikibase item %r for %s", qid, queried_title)
            return NotFound(language=language, title=queried_title)
        return ResolvedEntity(
            qid=qid,
            canonical_title=page["title"],
            language=language,
            redirected_from=queried_title if redirected else None,
        )
    raise ResolutionError(f"empty page set for {queried_title!r}")


def batch_resolve(
    pairs: list[tuple[str, str]],
    cache: FileCache | None,
    transport,
    limiter=None,
    **kwargs,
) -> dict[tuple[str, str], ResolvedEntity | NotFound | ResolutionError]:
    """Resolve many pairs; total over the input, one fetch per distinct pair.

    Per-pair failures are embedded in the map as ResolutionError values so
    one flaky title never sinks the batch.
    """
    results: dict[tuple[str, str], ResolvedEntity | NotFound | ResolutionError] = {}
    for pair in pairs:
        if pair in results:
            continue
        language, title = pair
        try:
            results[pair] = resolve(language, title, cache, transport, limiter, **kwargs)
        except ResolutionError as exc:
            logger.warning("resolution failed for %s: %s", pair, exc)
            results[pair] = exc
    return results

"""Wikipedia API Search fallback (WAPIS).

Each mention's verbatim surface text goes into an `opensearch` prefix query
against the configured wiki hosts, mirroring what the drop-down suggestion
list under a Wikipedia search box would offer. No lemmatization, no context:
the query text is exactly the mention surface.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from .cache import FileCache
from .protocol import Candidate
from .transport import (
    DEFAULT_BACKOFF_BASE,
    DEFAULT_HTTP_TIMEOUT,
    DEFAULT_RETRIES,
    TransportError,
    TransportTimeout,
    fetch_with_retries,
)

logger = logging.getLogger(__name__)

DEFAULT_HOSTS = ("is.wikipedia.org", "en.wikipedia.org")
DEFAULT_LIMIT = 10

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_INVALID = "invalid_response"
STATUS_UNREACHABLE = "unreachable"


def http_error_status(code: int) -> str:
    return f"http_error:{code}"


@dataclass(frozen=True)
class SearchQuery:
    text: str
    hosts: tuple[str, ...] = DEFAULT_HOSTS
    limit: int = DEFAULT_LIMIT

    def __post_init__(self):
        if not self.text:
            raise ValueError("query text must be non-empty")
        if not self.hosts:
            raise ValueError("at least one host is required")
        if self.limit < 1:
            raise ValueError("limit must be >= 1")


@dataclass
class SearchResult:
    candidates: list[Candidate] = field(default_factory=list)
    per_host_status: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return any(status == STATUS_OK for status in self.per_host_status.values())


def _percent_encode(text: str) -> str:
    # RFC 3986: everything outside the unreserved set is %XX-encoded per UTF-8 byte
    from urllib.parse import quote

    return quote(text, safe="")


def build_search_url(text: str, host: str, limit: int) -> str:
    if not text:
        raise ValueError("text must be non-empty")
    return (
        f"https://{host}/w/api.php?action=opensearch"
        f"&search={_percent_encode(text)}&limit={limit}&namespace=0&format=json"
    )


def parse_opensearch_body(body: str, host: str) -> list[Candidate]:
    """Parse the 4-element opensearch array into SEARCH candidates.

    The candidate language is the host's language subdomain. Raises
    ValueError when the body is not the expected array form.
    """
    data = json.loads(body)
    if not isinstance(data, list) or len(data) != 4 or not isinstance(data[1], list):
        raise ValueError("not a 4-element opensearch response")
    language = host.split(".")[0]
    candidates = []
    for title in data[1]:
        candidates.append(Candidate(source="SEARCH", language=language, title=str(title)))
    return candidates


def search(
    query: SearchQuery,
    cache: FileCache | None,
    transport,
    limiter=None,
    http_timeout: float = DEFAULT_HTTP_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    sleep: Callable[[float], None] = time.sleep,
) -> SearchResult:
    """Query every host cache-first and merge candidates host-order-first.

    A failing host is recorded in per_host_status and never fails the whole
    search; with every host down the result simply has no candidates.
    """
    result = SearchResult()
    for host in query.hosts:
        body: str | None = cache.get(host, query.text) if cache is not None else None
        if body is None:
            url = build_search_url(query.text, host, query.limit)
            if limiter is not None:
                limiter.acquire(host)
            try:
                status, body = fetch_with_retries(
                    transport,
                    url,
                    timeout=http_timeout,
                    retries=retries,
                    backoff_base=backoff_base,
                    sleep=sleep,
                )
            except TransportTimeout:
                result.per_host_status[host] = STATUS_TIMEOUT
                continue
            except TransportError as exc:
                logger.warning("search on %s failed: %s", host, exc)
                result.per_host_status[host] = STATUS_UNREACHABLE
                continue
            if status != 200:
                result.per_host_status[host] = http_error_status(status)
                continue
            if cache is not None:
                cache.put(host, query.text, body)
        try:
            candidates = parse_opensearch_body(body, host)
        except (ValueError, json.JSONDecodeError):
            result.per_host_status[host] = STATUS_INVALID
            continue
        result.per_host_status[host] = STATUS_OK
        result.candidates.extend(candidates)
    return result

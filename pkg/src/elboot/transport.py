"""HTTP transport plumbing shared by the wiki clients: a swappable GET
interface, a per-host token-bucket rate limiter, and retry-with-backoff.

The limiter and retry loop take injectable clock/sleep functions so tests
can run them against a virtual clock.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

import requests

logger = logging.getLogger(__name__)

DEFAULT_RATE = 2.0  # requests/second/host: public API etiquette
DEFAULT_HTTP_TIMEOUT = 15.0
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_BASE = 0.5

USER_AGENT = "elboot/0.1 (corpus bootstrapping toolkit)"


class TransportError(RuntimeError):
    """Connection-level failure (DNS, refused, reset)."""


class TransportTimeout(TransportError):
    """The request did not complete within the timeout."""


class RequestsTransport:
    """requests-backed transport; safe for concurrent use."""

    def __init__(self, session: requests.Session | None = None):
        self._session = session or requests.Session()
        self._session.headers.setdefault("User-Agent", USER_AGENT)

    def get(self, url: str, timeout: float = DEFAULT_HTTP_TIMEOUT) -> tuple[int, str]:
        try:
            response = self._session.get(url, timeout=timeout)
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        return response.status_code, response.text


class TokenBucket:
    """Token bucket: `rate` tokens/second, holding at most `capacity`."""

    def __init__(
        self,
        rate: float,
        capacity: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = max(1.0, capacity)
        self.clock = clock
        self.sleep = sleep
        self._tokens = self.capacity
        self._updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        """Block until one token is available, then consume it."""
        while True:
            with self._lock:
                now = self.clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self.sleep(wait)


class RateLimiter:
    """Shared per-host limiter handed to every outbound wiki client."""

    def __init__(
        self,
        rate: float = DEFAULT_RATE,
        capacity: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.rate = rate
        self.capacity = capacity
        self.clock = clock
        self.sleep = sleep
        self._buckets: dict[str, TokenBucket] = {}
        self._lock = threading.Lock()

    def acquire(self, host: str) -> None:
        with self._lock:
            bucket = self._buckets.get(host)
            if bucket is None:
                bucket = TokenBucket(self.rate, self.capacity, self.clock, self.sleep)
                self._buckets[host] = bucket
        bucket.acquire()


def fetch_with_retries(
    transport,
    url: str,
    timeout: float = DEFAULT_HTTP_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff_base: float = DEFAULT_BACKOFF_BASE,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[int, str]:
    """GET with exponential backoff on 429/5xx and on transport timeouts.

    Returns the final (status, body); non-retryable statuses return
    immediately. Raises the last TransportError once retries are exhausted.
    """
    attempt = 0
    while True:
        try:
            status, body = transport.get(url, timeout=timeout)
        except TransportError:
            if attempt >= retries:
                raise
            sleep(backoff_base * (2**attempt))
            attempt += 1
            continue
        if status == 429 or 500 <= status < 600:
            if attempt >= retries:
                return status, body
            logger.debug("retrying %s after HTTP %d", url, status)
            sleep(backoff_base * (2**attempt))
            attempt += 1
            continue
        return status, body

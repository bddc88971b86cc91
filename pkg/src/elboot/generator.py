"""Candidate generation against an external model backend.

The model itself lives behind the wire protocol (see protocol.py) as a child
process or an HTTP endpoint, so the heavy ML runtime never links into this
package. A scripted in-memory backend stands in for it in tests and dry runs.
"""

from __future__ import annotations

import logging
import shlex
import subprocess
import threading
from concurrent.futures import Future, ThreadPoolExecutor

import requests

from .corpus import Mention
from .protocol import (
    Candidate,
    GeneratorRequest,
    ProtocolError,
    decode_request_record,
    decode_response_record,
    encode_request_record,
    encode_response_record,
)

logger = logging.getLogger(__name__)

DEFAULT_FANOUT = 4
DEFAULT_TIMEOUT = 30.0


class BackendStartupError(RuntimeError):
    """The generator backend could not be reached or spawned."""


def encode_request(mention: Mention, max_candidates: int) -> GeneratorRequest:
    """Build a protocol request; contexts are carried over verbatim."""
    return GeneratorRequest(
        mention_id=mention.id,
        left_context=mention.left_context,
        mention=mention.surface,
        right_context=mention.right_context,
        max_candidates=max_candidates,
    )


class ScriptedBackend:
    """Answers protocol requests from a fixed mention_id -> candidates map.

    Requests and responses are round-tripped through the wire encoding so the
    protocol path is exercised even in fully scripted runs; unknown ids get
    an empty candidate list.
    """

    def __init__(self, fixture: dict[str, list[Candidate]]):
        self._fixture = dict(fixture)

    def start(self) -> None:
        pass

    def close(self) -> None:
        pass

    def __enter__(self) -> "ScriptedBackend":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def generate(self, request: GeneratorRequest, timeout: float | None = None) -> list[Candidate]:
        decoded = decode_request_record(encode_request_record(request))
        candidates = self._fixture.get(decoded.mention_id, [])[: decoded.max_candidates]
        line = encode_response_record(decoded.mention_id, candidates)
        _, out = decode_response_record(line)
        return out


def scripted_backend(fixture: dict[str, list[Candidate]]) -> ScriptedBackend:
    return ScriptedBackend(fixture)


class ProcessBackend:
    """Speaks protocol v1 over a child process's stdin/stdout.

    One writer lock serializes request lines; a reader thread matches
    responses to in-flight futures by id, so out-of-order replies are fine.
    """

    def __init__(self, command: str | list[str]):
        self._command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None
        self._write_lock = threading.Lock()
        self._pending_lock = threading.Lock()
        self._pending: dict[str, Future] = {}
        self._reader: threading.Thread | None = None

    def start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendStartupError(f"cannot spawn backend {self._command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=5)
        except Exception:
            self._proc.kill()
        self._proc = None

    def __enter__(self) -> "ProcessBackend":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _read_loop(self) -> None:
        assert self._proc is not None and self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                mention_id, candidates = decode_response_record(line)
            except ProtocolError as exc:
                logger.warning("dropping malformed backend response: %s", exc)
                continue
            with self._pending_lock:
                future = self._pending.pop(mention_id, None)
            if future is None:
                logger.warning("backend response for unknown id %r", mention_id)
                continue
            future.set_result(candidates)
        # EOF: fail whatever is still in flight
        with self._pending_lock:
            pending, self._pending = self._pending, {}
        for future in pending.values():
            if not future.done():
                future.set_exception(RuntimeError("backend closed its output stream"))

    def generate(self, request: GeneratorRequest, timeout: float | None = DEFAULT_TIMEOUT) -> list[Candidate]:
        if self._proc is None:
            raise BackendStartupError("backend not started")
        future: Future = Future()
        with self._pending_lock:
            self._pending[request.mention_id] = future
        line = encode_request_record(request)
        with self._write_lock:
            assert self._proc.stdin is not None
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        try:
            return future.result(timeout=timeout)
        finally:
            with self._pending_lock:
                self._pending.pop(request.mention_id, None)


class HttpBackend:
    """POSTs one request record per call; the response body is one record."""

    def __init__(self, url: str, session: requests.Session | None = None):
        self._url = url
        self._session = session or requests.Session()

    def start(self) -> None:
        try:
            self._session.head(self._url, timeout=5)
        except requests.ConnectionError as exc:
            raise BackendStartupError(f"backend {self._url} unreachable: {exc}") from exc

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "HttpBackend":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def generate(self, request: GeneratorRequest, timeout: float | None = DEFAULT_TIMEOUT) -> list[Candidate]:
        response = self._session.post(
            self._url,
            data=encode_request_record(request).encode("utf-8"),
            headers={"Content-Type": "application/x-ndjson"},
            timeout=timeout,
        )
        response.raise_for_status()
        mention_id, candidates = decode_response_record(response.text.strip())
        if mention_id != request.mention_id:
            raise ProtocolError(f"response id {mention_id!r} != request id {request.mention_id!r}")
        return candidates


def run_batch(
    mentions: list[Mention],
    backend,
    max_candidates: int,
    fanout: int = DEFAULT_FANOUT,
    timeout: float = DEFAULT_TIMEOUT,
    errors: dict[str, str] | None = None,
) -> dict[str, list[Candidate]]:
    """Generate candidates for every mention; the result is total over input.

    Individual request failures (timeouts, malformed responses) leave that
    mention with an empty list and a logged note (also collected into
    `errors` when given); they never abort the batch. An unreachable backend
    raises BackendStartupError before any request is sent.
    """
    backend.start()
    results: dict[str, list[Candidate]] = {}

    def one(mention: Mention) -> tuple[str, list[Candidate], str | None]:
        request = encode_request(mention, max_candidates)
        try:
            return mention.id, backend.generate(request, timeout=timeout), None
        except Exception as exc:
            note = f"{type(exc).__name__}: {exc}"
            logger.warning("generation failed for %s: %s", mention.id, note)
            return mention.id, [], note

    with ThreadPoolExecutor(max_workers=max(1, fanout)) as pool:
        for mention_id, candidates, note in pool.map(one, mentions):
            results[mention_id] = candidates
            if note is not None and errors is not None:
                errors[mention_id] = note
    return results

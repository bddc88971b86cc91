"""Request formatting, prediction parsing and response building.

Everything here is pure so it can be tested without loading any model; the
generation function is injected (see serve.py for the real one).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

PROTOCOL_VERSION = 1

DEFAULT_START_MARKER = "[START]"
DEFAULT_END_MARKER = "[END]"

# generate(text, k) -> ranked [(output_text, raw_score)], best first
GenerateFn = Callable[[str, int], list[tuple[str, float]]]


@dataclass(frozen=True)
class AdapterConfig:
    model: str
    beam_width: int = 10
    device: str = "cpu"
    start_marker: str = DEFAULT_START_MARKER
    end_marker: str = DEFAULT_END_MARKER

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")


def format_input(left: str, mention: str, right: str,
                 start_marker: str = DEFAULT_START_MARKER,
                 end_marker: str = DEFAULT_END_MARKER) -> str:
    """Delimit the mention inside its context: `left [START] mention [END] right`."""
    parts = [left.strip(), start_marker, mention.strip(), end_marker, right.strip()]
    return " ".join(p for p in parts if p)


def parse_prediction(text: str) -> tuple[str, str] | None:
    """Split an `<entity name> >> <language>` prediction into (language, title).

    Returns None for outputs that do not follow the convention; callers drop
    those beams rather than guessing.
    """
    head, sep, tail = text.rpartition(">>")
    if not sep:
        return None
    title = head.strip()
    language = tail.strip()
    if not title or not language or " " in language:
        return None
    return language, title


def normalize_scores(raw: list[float]) -> list[float]:
    """Map raw beam scores into (0, 1], preserving order.

    Log-likelihood style scores (<= 0) go through exp(); anything else is
    softmax-normalized against the best beam.
    """
    if not raw:
        return []
    if all(score <= 0 for score in raw):
        return [math.exp(score) for score in raw]
    best = max(raw)
    expd = [math.exp(score - best) for score in raw]
    total = sum(expd)
    return [value / total for value in expd]


def respond(request_line: str, generate: GenerateFn, config: AdapterConfig) -> str:
    """Answer one protocol request line with one protocol response line.

    Bad requests never crash the serve loop: they produce a response with an
    empty candidate list and an `error` note (still a valid v1 record).
    """
    request_id = ""
    try:
        record = json.loads(request_line)
        if not isinstance(record, dict) or record.get("v") != PROTOCOL_VERSION:
            raise ValueError("unsupported record")
        request_id = str(record.get("id", ""))
        mention = str(record["mention"])
        if not mention:
            raise ValueError("empty mention")
        left = str(record.get("left", ""))
        right = str(record.get("right", ""))
        k = max(1, int(record.get("k", config.beam_width)))
    except (ValueError, KeyError, TypeError) as exc:
        return _error_response(request_id, f"bad request: {exc}")

    text = format_input(left, mention, right, config.start_marker, config.end_marker)
    try:
        beams = generate(text, min(k, config.beam_width))
    except Exception as exc:  # model hiccup: answer, don't die
        return _error_response(request_id, f"generation failed: {exc}")

    parsed = []
    for output, raw_score in beams:
        pair = parse_prediction(output)
        if pair is not None:
            parsed.append((pair, raw_score))
    scores = normalize_scores([score for _, score in parsed])
    candidates = [
        {"lang": lang, "title": title, "score": round(score, 6)}
        for ((lang, title), _), score in zip(parsed, scores)
    ]
    return json.dumps(
        {"v": PROTOCOL_VERSION, "id": request_id, "candidates": candidates[:k]},
        ensure_ascii=False,
    )


def _error_response(request_id: str, note: str) -> str:
    return json.dumps(
        {"v": PROTOCOL_VERSION, "id": request_id, "candidates": [], "error": note},
        ensure_ascii=False,
    )

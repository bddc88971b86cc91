"""Generator wire protocol, version 1.

Newline-delimited UTF-8 JSON records, spoken either over a child process's
stdin/stdout or as the body of a POST request. One response per request,
matched by `id`; responses may arrive out of order.

Request record:  {"v": 1, "id": ..., "left": ..., "mention": ..., "right": ..., "k": ...}
Response record: {"v": 1, "id": ..., "candidates": [{"lang": ..., "title": ..., "score"?: ...}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass

PROTOCOL_VERSION = 1


class ProtocolError(ValueError):
    """A record that does not conform to protocol v1."""


@dataclass(frozen=True)
class GeneratorRequest:
    mention_id: str
    left_context: str
    mention: str
    right_context: str
    max_candidates: int

    def __post_init__(self):
        if not self.mention:
            raise ValueError("mention must be non-empty")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass(frozen=True)
class Candidate:
    """A (language, title) pair proposed for a mention, best-first ranked."""

    source: str  # "MODEL" or "SEARCH"
    language: str
    title: str
    score: float | None = None
    qid: str | None = None

    def __post_init__(self):
        if not self.title:
            raise ValueError("candidate title must be non-empty")
        if not self.language:
            raise ValueError("candidate language must be non-empty")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"candidate score {self.score} outside [0, 1]")

    def to_dict(self) -> dict:
        out = {"source": self.source, "language": self.language, "title": self.title}
        if self.score is not None:
            out["score"] = self.score
        if self.qid is not None:
            out["qid"] = self.qid
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Candidate":
        return cls(
            source=data["source"],
            language=data["language"],
            title=data["title"],
            score=data.get("score"),
            qid=data.get("qid"),
        )


def encode_request_record(request: GeneratorRequest) -> str:
    record = {
        "v": PROTOCOL_VERSION,
        "id": request.mention_id,
        "left": request.left_context,
        "mention": request.mention,
        "right": request.right_context,
        "k": request.max_candidates,
    }
    return json.dumps(record, ensure_ascii=False)


def decode_request_record(line: str) -> GeneratorRequest:
    data = _load(line)
    for key in ("id", "left", "mention", "right", "k"):
        if key not in data:
            raise ProtocolError(f"request record missing field {key!r}")
    try:
        return GeneratorRequest(
            mention_id=str(data["id"]),
            left_context=str(data["left"]),
            mention=str(data["mention"]),
            right_context=str(data["right"]),
            max_candidates=int(data["k"]),
        )
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"invalid request record: {exc}") from exc


def encode_response_record(mention_id: str, candidates: list[Candidate]) -> str:
    items = []
    for cand in candidates:
        item = {"lang": cand.language, "title": cand.title}
        if cand.score is not None:
            item["score"] = cand.score
        items.append(item)
    return json.dumps(
        {"v": PROTOCOL_VERSION, "id": mention_id, "candidates": items}, ensure_ascii=False
    )


def decode_response_record(line: str) -> tuple[str, list[Candidate]]:
    """Decode one response line into (mention_id, MODEL candidates)."""
    data = _load(line)
    if "id" not in data or "candidates" not in data:
        raise ProtocolError("response record missing id/candidates")
    if not isinstance(data["candidates"], list):
        raise ProtocolError("candidates must be an array")
    candidates = []
    for item in data["candidates"]:
        if not isinstance(item, dict) or "lang" not in item or "title" not in item:
            raise ProtocolError(f"malformed candidate record: {item!r}")
        score = item.get("score")
        if score is not None:
            try:
                score = float(score)
            except (TypeError, ValueError) as exc:
                raise ProtocolError(f"non-numeric score: {item!r}") from exc
        try:
            candidates.append(
                Candidate(source="MODEL", language=str(item["lang"]), title=str(item["title"]), score=score)
            )
        except ValueError as exc:
            raise ProtocolError(str(exc)) from exc
    return str(data["id"]), candidates


def _load(line: str) -> dict:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"record is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProtocolError("record must be a JSON object")
    if data.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {data.get('v')!r}")
    return data

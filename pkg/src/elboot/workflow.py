"""Annotation workflow: per-mention state machine, append-only event journal,
and corpus export.

Every mutation is an event: the public operations validate, build the event,
apply it, and append it to the journal. Replaying a journal therefore
reproduces the store byte-for-byte, which is also how stores are loaded.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from .corpus import Mention, filter_linkable
from .protocol import Candidate
from .resolver import ResolvedEntity

PREFERRED_LANGUAGES = ("is", "en")

TAG_CATEGORIES = frozenset(
    {
        "person",
        "fictional_character",
        "institution_company",
        "location",
        "book_title",
        "brand",
        "event",
        "show",
        "nomenclature",
        "magazine",
        "deity",
        "other",
    }
)
TAG_FACTORS = frozenset(
    {
        "first_name_only",
        "last_name_only",
        "nickname",
        "name_insertion",
        "abbreviation",
        "no_context",
        "inexact_location",
        "translated_title",
        "misspelling",
        "none",
    }
)


class WorkflowState(str, Enum):
    PENDING = "Pending"
    MODEL_SUGGESTED = "ModelSuggested"
    MODEL_ACCEPTED = "ModelAccepted"
    MODEL_REJECTED = "ModelRejected"
    SEARCH_SUGGESTED = "SearchSuggested"
    SEARCH_ACCEPTED = "SearchAccepted"
    UNLABELED = "Unlabeled"


TERMINAL_STATES = frozenset(
    {WorkflowState.MODEL_ACCEPTED, WorkflowState.SEARCH_ACCEPTED, WorkflowState.UNLABELED}
)

NO_MATCH = "no_match"


class TransitionError(RuntimeError):
    """Operation applied to a record in the wrong state."""


class StoreError(RuntimeError):
    """Store-level failure: duplicate ids, export before finalize, ..."""


@dataclass(frozen=True)
class UnlabeledTag:
    category: str
    factors: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.category not in TAG_CATEGORIES:
            raise ValueError(f"unknown tag category {self.category!r}")
        unknown = set(self.factors) - TAG_FACTORS
        if unknown:
            raise ValueError(f"unknown tag factors {sorted(unknown)!r}")

    def to_dict(self) -> dict:
        return {"category": self.category, "factors": sorted(self.factors)}

    @classmethod
    def from_dict(cls, data: dict) -> "UnlabeledTag":
        return cls(category=data["category"], factors=frozenset(data["factors"]))


@dataclass
class Decision:
    annotator_id: str
    action: str
    timestamp: float


@dataclass
class WorkflowRecord:
    mention_id: str
    state: WorkflowState = WorkflowState.PENDING
    model_candidates: list[Candidate] | None = None  # None: model round not run yet
    model_top_resolution: ResolvedEntity | None = None
    search_candidates: list[Candidate] | None = None
    search_resolutions: list[ResolvedEntity | None] | None = None
    correct_wiki: ResolvedEntity | None = None
    suggestion_wiki: ResolvedEntity | None = None
    overlap: bool | None = None
    decisions: list[Decision] = field(default_factory=list)
    unlabeled_tag: UnlabeledTag | None = None

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL_STATES

    @property
    def search_eligible(self) -> bool:
        """Rejected by the reviewer, or model round ran and produced nothing usable."""
        if self.state == WorkflowState.MODEL_REJECTED:
            return True
        return self.state == WorkflowState.PENDING and self.model_candidates is not None

    @property
    def label(self) -> ResolvedEntity | None:
        return self.correct_wiki if self.correct_wiki is not None else self.suggestion_wiki

    def to_dict(self) -> dict:
        return {
            "mention_id": self.mention_id,
            "state": self.state.value,
            "model_candidates": None
            if self.model_candidates is None
            else [c.to_dict() for c in self.model_candidates],
            "model_top_resolution": None
            if self.model_top_resolution is None
            else self.model_top_resolution.to_dict(),
            "search_candidates": None
            if self.search_candidates is None
            else [c.to_dict() for c in self.search_candidates],
            "search_resolutions": None
            if self.search_resolutions is None
            else [None if r is None else r.to_dict() for r in self.search_resolutions],
            "correct_wiki": None if self.correct_wiki is None else self.correct_wiki.to_dict(),
            "suggestion_wiki": None
            if self.suggestion_wiki is None
            else self.suggestion_wiki.to_dict(),
            "overlap": self.overlap,
            "decisions": [[d.annotator_id, d.action, d.timestamp] for d in self.decisions],
            "unlabeled_tag": None if self.unlabeled_tag is None else self.unlabeled_tag.to_dict(),
        }


class JournalWriter:
    """Append-only UTF-8 JSON-lines writer with one flush per event."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()


def read_journal(path: str | Path) -> list[dict]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


class WorkflowStore:
    """Single-writer store over the per-mention state machine.

    All mutations are serialized through one lock and routed through
    `_apply`, the same function replay uses, so a live store and a
    journal-replayed store can never diverge.
    """

    def __init__(
        self,
        journal: JournalWriter | None = None,
        clock: Callable[[], float] = time.time,
        preferred_languages: tuple[str, ...] = PREFERRED_LANGUAGES,
    ):
        self.journal = journal
        self.clock = clock
        self.preferred_languages = tuple(preferred_languages)
        self.records: dict[str, WorkflowRecord] = {}
        self.mentions: dict[str, Mention] = {}
        self.subcategories: dict[str, str] = {}
        self.skew_subcategories: set[str] = set()
        self.finalized = False
        self.seen_request_ids: set[str] = set()
        self._lock = threading.RLock()

    @property
    def lock(self) -> threading.RLock:
        """The single-writer lock; readers may hold it for consistent snapshots."""
        return self._lock

    # ------------------------------------------------------------------ ops

    def init(
        self,
        mentions: Iterable[Mention],
        subcategories: dict[str, str] | None = None,
        skew_subcategories: Iterable[str] = (),
    ) -> None:
        """Create one Pending record per linkable mention.

        `skew_subcategories` marks sources (anonymized texts etc.) whose
        coverage numbers are unreliable; reports carry the warning through.
        """
        linkable = filter_linkable(mentions)
        seen: set[str] = set()
        for mention in linkable:
            if mention.id in seen or mention.id in self.records:
                raise StoreError(f"duplicate mention id {mention.id!r}")
            seen.add(mention.id)
        payload = {
            "mentions": [m.to_dict() for m in linkable],
            "subcategories": dict(subcategories or {}),
            "skew_subcategories": sorted(skew_subcategories),
        }
        self._emit("init", "", payload)

    def record_model_suggestion(
        self,
        mention_id: str,
        candidates: list[Candidate],
        top_resolution: ResolvedEntity | None = None,
    ) -> WorkflowState:
        """Store the model's ranked candidates for a Pending record.

        The record moves to ModelSuggested only when there is a top candidate
        and it resolved to a QID; otherwise it stays Pending and becomes
        eligible for the search round.
        """
        with self._lock:
            record = self._get(mention_id)
            if record.state != WorkflowState.PENDING or record.model_candidates is not None:
                raise TransitionError(
                    f"{mention_id}: model suggestion requires a fresh Pending record "
                    f"(state={record.state.value})"
                )
            payload = {
                "candidates": [c.to_dict() for c in candidates],
                "top_resolution": None if top_resolution is None else top_resolution.to_dict(),
            }
            self._emit("model_suggested", mention_id, payload)
            return record.state

    def apply_model_decision(
        self,
        mention_id: str,
        decision: str,
        annotator_id: str,
        request_id: str | None = None,
    ) -> WorkflowState:
        if decision not in ("accept", "reject"):
            raise ValueError(f"decision must be accept or reject, got {decision!r}")
        with self._lock:
            record = self._get(mention_id)
            if record.state != WorkflowState.MODEL_SUGGESTED:
                raise TransitionError(
                    f"{mention_id}: model decision requires ModelSuggested "
                    f"(state={record.state.value})"
                )
            payload: dict = {"decision": decision}
            if request_id is not None:
                payload["request_id"] = request_id
            self._emit("model_decision", mention_id, payload, annotator=annotator_id)
            return record.state

    def attach_search_results(
        self,
        mention_id: str,
        result,
        resolutions: dict[tuple[str, str], object] | None = None,
        statuses: dict[str, str] | None = None,
    ) -> WorkflowState:
        """Attach WAPIS candidates, reordered preferred-language-first.

        `result` is a wapis SearchResult or a plain candidate list. For
        ModelAccepted records this only computes the overlap flag; for
        search-eligible records a non-empty list moves them to
        SearchSuggested.
        """
        if hasattr(result, "candidates"):
            candidates = list(result.candidates)
            if statuses is None:
                statuses = dict(result.per_host_status)
        else:
            candidates = list(result)
        with self._lock:
            record = self._get(mention_id)
            if record.state != WorkflowState.MODEL_ACCEPTED and not record.search_eligible:
                raise TransitionError(
                    f"{mention_id}: search results need ModelAccepted, ModelRejected or a "
                    f"model-round-exhausted Pending record (state={record.state.value})"
                )
            ordered = self._order_candidates(candidates)
            resolved: list[ResolvedEntity | None] = []
            for cand in ordered:
                res = (resolutions or {}).get((cand.language, cand.title))
                resolved.append(res if isinstance(res, ResolvedEntity) else None)
            payload = {
                "candidates": [c.to_dict() for c in ordered],
                "resolutions": [None if r is None else r.to_dict() for r in resolved],
            }
            if statuses:
                payload["statuses"] = dict(statuses)
            self._emit("search_attached", mention_id, payload)
            return record.state

    def apply_search_selection(
        self,
        mention_id: str,
        selection: int | str,
        annotator_id: str,
        request_id: str | None = None,
    ) -> WorkflowState:
        with self._lock:
            record = self._get(mention_id)
            if record.state != WorkflowState.SEARCH_SUGGESTED:
                raise TransitionError(
                    f"{mention_id}: search selection requires SearchSuggested "
                    f"(state={record.state.value})"
                )
            if selection != NO_MATCH:
                index = int(selection)
                assert record.search_candidates is not None
                if not 0 <= index < len(record.search_candidates):
                    raise ValueError(
                        f"{mention_id}: candidate index {index} out of range "
                        f"0..{len(record.search_candidates) - 1}"
                    )
                assert record.search_resolutions is not None
                if record.search_resolutions[index] is None:
                    raise ValueError(f"{mention_id}: candidate {index} has no resolved QID")
                selection = index
            payload: dict = {"selection": selection}
            if request_id is not None:
                payload["request_id"] = request_id
            self._emit("search_selection", mention_id, payload, annotator=annotator_id)
            return record.state

    def finalize(self) -> None:
        """Move every non-terminal record to Unlabeled and freeze the partition."""
        with self._lock:
            if self.finalized:
                return
            self._emit("finalize", "", {})

    def tag_unlabeled(
        self,
        mention_id: str,
        tag: UnlabeledTag,
        annotator_id: str,
        request_id: str | None = None,
    ) -> None:
        with self._lock:
            record = self._get(mention_id)
            if record.state != WorkflowState.UNLABELED:
                raise TransitionError(
                    f"{mention_id}: taxonomy tags apply to Unlabeled records only "
                    f"(state={record.state.value})"
                )
            payload: dict = {"tag": tag.to_dict()}
            if request_id is not None:
                payload["request_id"] = request_id
            self._emit("tag", mention_id, payload, annotator=annotator_id)

    # ------------------------------------------------------------ event core

    def _get(self, mention_id: str) -> WorkflowRecord:
        record = self.records.get(mention_id)
        if record is None:
            raise StoreError(f"unknown mention id {mention_id!r}")
        return record

    def _order_candidates(self, candidates: list[Candidate]) -> list[Candidate]:
        priority = {lang: i for i, lang in enumerate(self.preferred_languages)}
        fallback = len(self.preferred_languages)
        return sorted(candidates, key=lambda c: priority.get(c.language, fallback))

    def _next_timestamp(self, mention_id: str) -> float:
        now = self.clock()
        record = self.records.get(mention_id)
        if record is not None and record.decisions:
            now = max(now, record.decisions[-1].timestamp)
        return now

    def _emit(self, etype: str, mention_id: str, payload: dict, annotator: str = "") -> None:
        with self._lock:
            event = {
                "type": etype,
                "mention_id": mention_id,
                "payload": payload,
                "annotator": annotator,
                "ts": self._next_timestamp(mention_id),
            }
            self._apply(event)
            if self.journal is not None:
                self.journal.append(event)

    def _apply(self, event: dict) -> None:
        etype = event["type"]
        mention_id = event["mention_id"]
        payload = event["payload"]
        annotator = event.get("annotator", "")
        ts = event.get("ts", 0.0)
        request_id = payload.get("request_id")
        if request_id is not None:
            self.seen_request_ids.add(request_id)

        if etype == "init":
            for data in payload["mentions"]:
                mention = Mention.from_dict(data)
                if mention.id in self.records:
                    raise StoreError(f"duplicate mention id {mention.id!r}")
                self.mentions[mention.id] = mention
                self.records[mention.id] = WorkflowRecord(mention_id=mention.id)
            self.subcategories.update(payload.get("subcategories", {}))
            self.skew_subcategories.update(payload.get("skew_subcategories", []))
        elif etype == "model_suggested":
            record = self._get(mention_id)
            record.model_candidates = [Candidate.from_dict(c) for c in payload["candidates"]]
            top = payload.get("top_resolution")
            record.model_top_resolution = None if top is None else ResolvedEntity.from_dict(top)
            if record.model_candidates and record.model_top_resolution is not None:
                record.state = WorkflowState.MODEL_SUGGESTED
        elif etype == "model_decision":
            record = self._get(mention_id)
            decision = payload["decision"]
            if decision == "accept":
                record.state = WorkflowState.MODEL_ACCEPTED
                record.correct_wiki = record.model_top_resolution
            else:
                record.state = WorkflowState.MODEL_REJECTED
            record.decisions.append(Decision(annotator, decision, ts))
        elif etype == "search_attached":
            record = self._get(mention_id)
            record.search_candidates = [Candidate.from_dict(c) for c in payload["candidates"]]
            record.search_resolutions = [
                None if r is None else ResolvedEntity.from_dict(r)
                for r in payload["resolutions"]
            ]
            if record.state == WorkflowState.MODEL_ACCEPTED:
                assert record.correct_wiki is not None
                qids = {r.qid for r in record.search_resolutions if r is not None}
                record.overlap = record.correct_wiki.qid in qids
            elif record.search_candidates:
                record.state = WorkflowState.SEARCH_SUGGESTED
        elif etype == "search_selection":
            record = self._get(mention_id)
            selection = payload["selection"]
            if selection == NO_MATCH:
                record.state = WorkflowState.UNLABELED
                record.decisions.append(Decision(annotator, NO_MATCH, ts))
            else:
                assert record.search_resolutions is not None
                record.suggestion_wiki = record.search_resolutions[int(selection)]
                record.state = WorkflowState.SEARCH_ACCEPTED
                record.decisions.append(Decision(annotator, f"select:{selection}", ts))
        elif etype == "finalize":
            for record in self.records.values():
                if not record.terminal:
                    record.state = WorkflowState.UNLABELED
            self.finalized = True
        elif etype == "tag":
            record = self._get(mention_id)
            record.unlabeled_tag = UnlabeledTag.from_dict(payload["tag"])
            record.decisions.append(Decision(annotator, f"tag:{record.unlabeled_tag.category}", ts))
        else:
            raise StoreError(f"unknown journal event type {etype!r}")

    # ------------------------------------------------------- load & snapshot

    @classmethod
    def replay(cls, events: Iterable[dict], **kwargs) -> "WorkflowStore":
        store = cls(**kwargs)
        for event in events:
            store._apply(event)
        return store

    @classmethod
    def load(cls, journal_path: str | Path, writable: bool = True, **kwargs) -> "WorkflowStore":
        path = Path(journal_path)
        events = read_journal(path) if path.exists() else []
        store = cls.replay(events, **kwargs)
        if writable:
            store.journal = JournalWriter(path)
        return store

    def snapshot_bytes(self) -> bytes:
        with self._lock:
            state = {
                "finalized": self.finalized,
                "subcategories": self.subcategories,
                "skew_subcategories": sorted(self.skew_subcategories),
                "mentions": {mid: m.to_dict() for mid, m in self.mentions.items()},
                "records": {mid: r.to_dict() for mid, r in self.records.items()},
            }
        return json.dumps(state, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode(
            "utf-8"
        )

    def write_snapshot(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.snapshot_bytes())

    # --------------------------------------------------------------- export

    EXPORT_COLUMNS = (
        "mention_id",
        "doc_id",
        "subcategory",
        "surface",
        "ne_type",
        "correct_wiki",
        "suggestion_wiki",
        "label_language",
        "state",
    )

    def export_rows(self) -> list[tuple[str, ...]]:
        """One row per linkable mention; unlabeled iff both wiki fields empty."""
        with self._lock:
            if not self.finalized:
                raise StoreError("export requires a finalized store")
            rows = []
            for mention_id, record in self.records.items():
                mention = self.mentions[mention_id]
                label = record.label
                rows.append(
                    (
                        mention_id,
                        mention.doc_id,
                        self.subcategories.get(mention.doc_id, "unknown"),
                        mention.surface,
                        mention.ne_type,
                        "" if record.correct_wiki is None else record.correct_wiki.qid,
                        "" if record.suggestion_wiki is None else record.suggestion_wiki.qid,
                        "" if label is None else label.language,
                        record.state.value,
                    )
                )
            return rows

    def export_tsv(self) -> str:
        lines = ["\t".join(self.EXPORT_COLUMNS)]
        for row in self.export_rows():
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

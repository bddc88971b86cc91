"""Review service core: stage queues, mention leasing, decision posting and
progress reporting. The HTTP layer (webapp.py) is a thin shell over this.

Leasing guarantees each mention is under review by at most one annotator at
a time; decisions are idempotent via a client-supplied request id, so a
retried POST after a timeout never lands twice in the journal.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import stats
from .workflow import UnlabeledTag, WorkflowRecord, WorkflowState, WorkflowStore

logger = logging.getLogger(__name__)

STAGES = ("model_review", "search_review", "taxonomy")
DEFAULT_LEASE_TTL = 600.0  # review takes seconds; TTL guards abandoned tabs


class LeaseConflict(RuntimeError):
    """Unknown or expired lease token."""


@dataclass
class Lease:
    mention_id: str
    annotator_id: str
    token: str
    expires_at: float


def _in_stage(record: WorkflowRecord, stage: str) -> bool:
    if stage == "model_review":
        return record.state == WorkflowState.MODEL_SUGGESTED
    if stage == "search_review":
        return record.state == WorkflowState.SEARCH_SUGGESTED
    if stage == "taxonomy":
        return record.state == WorkflowState.UNLABELED and record.unlabeled_tag is None
    raise ValueError(f"unknown stage {stage!r}")


class ReviewService:
    def __init__(
        self,
        store: WorkflowStore,
        lease_ttl: float = DEFAULT_LEASE_TTL,
        clock: Callable[[], float] = time.time,
        snapshot_dir: str | Path | None = None,
        snapshot_every: int = 0,
    ):
        self.store = store
        self.lease_ttl = lease_ttl
        self.clock = clock
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        self.snapshot_every = snapshot_every
        self._leases: dict[str, Lease] = {}  # mention_id -> lease
        self._tokens: dict[str, Lease] = {}  # token -> lease
        self._lock = threading.Lock()
        self._decision_count = 0

    # -------------------------------------------------------------- queues

    def _candidate_view(self, record: WorkflowRecord, stage: str) -> list[dict]:
        # model stage surfaces only the top prediction; search shows the full list
        if stage == "model_review":
            if not record.model_candidates:
                return []
            top = record.model_candidates[0].to_dict()
            if record.model_top_resolution is not None:
                top["qid"] = record.model_top_resolution.qid
                top["canonical_title"] = record.model_top_resolution.canonical_title
            return [top]
        if stage == "search_review":
            views = []
            for cand, res in zip(record.search_candidates or [], record.search_resolutions or []):
                view = cand.to_dict()
                if res is not None:
                    view["qid"] = res.qid
                    view["canonical_title"] = res.canonical_title
                views.append(view)
            return views
        return []

    def get_queue(self, stage: str, annotator_id: str, n: int) -> list[dict]:
        """Lease up to n reviewable mentions for one annotator.

        Leased mentions stay out of every other queue pull until the lease
        expires or the decision lands.
        """
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        items: list[dict] = []
        with self._lock:
            now = self.clock()
            for mention_id, record in self.store.records.items():
                if len(items) >= n:
                    break
                if not _in_stage(record, stage):
                    continue
                lease = self._leases.get(mention_id)
                if lease is not None and lease.expires_at > now:
                    continue
                if lease is not None:  # expired: evict before re-leasing
                    self._tokens.pop(lease.token, None)
                lease = Lease(
                    mention_id=mention_id,
                    annotator_id=annotator_id,
                    token=uuid.uuid4().hex,
                    expires_at=now + self.lease_ttl,
                )
                self._leases[mention_id] = lease
                self._tokens[lease.token] = lease
                mention = self.store.mentions[mention_id]
                items.append(
                    {
                        "mention_id": mention_id,
                        "stage": stage,
                        "surface": mention.surface,
                        "left_context": mention.left_context,
                        "right_context": mention.right_context,
                        "ne_type": mention.ne_type,
                        "doc_id": mention.doc_id,
                        "subcategory": self.store.subcategories.get(mention.doc_id, "unknown"),
                        "candidates": self._candidate_view(record, stage),
                        "lease_token": lease.token,
                        "expires_at": lease.expires_at,
                    }
                )
        return items

    # ------------------------------------------------------------ decisions

    def _release(self, lease: Lease) -> None:
        with self._lock:
            current = self._leases.get(lease.mention_id)
            if current is not None and current.token == lease.token:
                del self._leases[lease.mention_id]
            self._tokens.pop(lease.token, None)

    def post_decision(self, token: str, payload: dict) -> dict:
        """Apply one review decision; idempotent on payload["request_id"]."""
        request_id = payload.get("request_id")
        if request_id is not None and request_id in self.store.seen_request_ids:
            return {"status": "duplicate", "request_id": request_id}
        with self._lock:
            lease = self._tokens.get(token)
            if lease is None or lease.expires_at <= self.clock():
                raise LeaseConflict("unknown or expired lease token")
        action = payload.get("action")
        mention_id = lease.mention_id
        annotator = lease.annotator_id
        if action in ("accept", "reject"):
            state = self.store.apply_model_decision(mention_id, action, annotator, request_id)
        elif action == "select":
            state = self.store.apply_search_selection(
                mention_id, int(payload["index"]), annotator, request_id
            )
        elif action == "no_match":
            state = self.store.apply_search_selection(mention_id, "no_match", annotator, request_id)
        elif action == "tag":
            tag = UnlabeledTag(
                category=payload["category"], factors=frozenset(payload.get("factors", []))
            )
            self.store.tag_unlabeled(mention_id, tag, annotator, request_id)
            state = WorkflowState.UNLABELED
        else:
            raise ValueError(f"unknown action {action!r}")
        self._release(lease)
        self._maybe_snapshot()
        return {"status": "ok", "mention_id": mention_id, "state": state.value}

    def _maybe_snapshot(self) -> None:
        if not self.snapshot_dir or self.snapshot_every <= 0:
            return
        with self._lock:
            self._decision_count += 1
            due = self._decision_count % self.snapshot_every == 0
            count = self._decision_count
        if due:
            path = self.snapshot_dir / f"snapshot-{count:08d}.json"
            try:
                self.store.write_snapshot(path)
            except OSError as exc:
                logger.warning("snapshot failed: %s", exc)

    # ------------------------------------------------------------- progress

    def get_progress(self) -> dict:
        """Per-stage remaining counts plus the current coverage snapshot.

        Mid-run the partition carries an explicit `pending` count; once the
        store is finalized the numbers equal stats.coverage exactly.
        """
        with self.store.lock:
            counts = stats.partition_counts(self.store)
            total = len(self.store.records)
            stages = {
                stage: sum(1 for r in self.store.records.values() if _in_stage(r, stage))
                for stage in STAGES
            }
            states = {
                state.value: sum(1 for r in self.store.records.values() if r.state == state)
                for state in WorkflowState
            }
            finalized = self.store.finalized
        coverage = {
            "total": total,
            "model_labeled": counts["model"],
            "search_labeled": counts["search"],
            "unlabeled": counts["unlabeled"],
            "pending": counts["pending"],
            "wapis_overlap": counts["overlap"],
            "wapis_total": counts["overlap"] + counts["search"],
        }
        pct_fields = ("model_labeled", "search_labeled", "unlabeled", "wapis_overlap", "wapis_total")
        for name in pct_fields:
            share = Fraction(coverage[name], total) if total else Fraction(0)
            coverage[f"pct_{name}"] = stats.pct_display(share)
        labeled = counts["model"] + counts["search"]
        coverage["pct_model_accuracy"] = (
            stats.pct_display(Fraction(counts["model"], labeled)) if labeled else ""
        )
        return {
            "finalized": finalized,
            "states": states,
            "stages": stages,
            "coverage": coverage,
        }

    def get_mention(self, mention_id: str) -> dict:
        record = self.store.records.get(mention_id)
        if record is None:
            raise KeyError(mention_id)
        mention = self.store.mentions[mention_id]
        view = record.to_dict()
        view["surface"] = mention.surface
        view["left_context"] = mention.left_context
        view["right_context"] = mention.right_context
        view["ne_type"] = mention.ne_type
        view["doc_id"] = mention.doc_id
        view["subcategory"] = self.store.subcategories.get(mention.doc_id, "unknown")
        return view

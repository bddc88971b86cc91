"""Coverage analytics over a finalized store: the labeled/unlabeled partition,
per-dimension breakdowns, and deterministic report rendering.

All counts and shares are exact (integers and Fractions); rounding happens
only at display time, half-up to one decimal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .workflow import WorkflowState, WorkflowStore

DIMENSIONS = (
    "label_language",
    "subcategory",
    "ne_type",
    "morph_tag",
    "unlabeled_category",
    "unlabeled_factor",
)
MEASURES = ("coverage_share", "composition_share")

UNTAGGED_KEY = "(untagged)"
NO_MORPH_KEY = "(none)"
OTHER_KEY = "other"

DEFAULT_COLLAPSE_THRESHOLD = 5  # rows with fewer records fold into "other"


def pct_display(share: Fraction) -> str:
    """One-decimal percentage with exact half-up rounding ("46.6")."""
    scaled = share * 1000  # tenths of a percent
    whole, rem = divmod(scaled.numerator, scaled.denominator)
    if Fraction(rem, scaled.denominator) >= Fraction(1, 2):
        whole += 1
    return f"{whole // 10}.{whole % 10}"


@dataclass(frozen=True)
class CoverageReport:
    total: int
    model_labeled: int
    search_labeled: int
    unlabeled: int
    wapis_overlap: int

    def __post_init__(self):
        if self.model_labeled + self.search_labeled + self.unlabeled != self.total:
            raise ValueError("partition counts do not sum to total")

    @property
    def wapis_total(self) -> int:
        """Mentions confirmed by search, whether or not the model labeled them first."""
        return self.wapis_overlap + self.search_labeled

    @property
    def model_accuracy(self) -> Fraction | None:
        return model_accuracy(self)

    @property
    def percentages(self) -> dict[str, str]:
        if self.total == 0:
            shares = {"model_labeled": "0.0", "search_labeled": "0.0", "unlabeled": "0.0",
                      "wapis_overlap": "0.0", "wapis_total": "0.0"}
            return shares
        return {
            "model_labeled": pct_display(Fraction(self.model_labeled, self.total)),
            "search_labeled": pct_display(Fraction(self.search_labeled, self.total)),
            "unlabeled": pct_display(Fraction(self.unlabeled, self.total)),
            "wapis_overlap": pct_display(Fraction(self.wapis_overlap, self.total)),
            "wapis_total": pct_display(Fraction(self.wapis_total, self.total)),
        }


@dataclass(frozen=True)
class BreakdownRow:
    key: str
    count: int
    share: Fraction
    note: str = ""  # e.g. "skew_warning" on anonymized subcategories

    @property
    def share_pct(self) -> str:
        return pct_display(self.share)


def partition_counts(store: WorkflowStore) -> dict[str, int]:
    counts = {"model": 0, "search": 0, "unlabeled": 0, "pending": 0, "overlap": 0}
    for record in store.records.values():
        if record.state == WorkflowState.MODEL_ACCEPTED:
            counts["model"] += 1
            if record.overlap:
                counts["overlap"] += 1
        elif record.state == WorkflowState.SEARCH_ACCEPTED:
            counts["search"] += 1
        elif record.state == WorkflowState.UNLABELED:
            counts["unlabeled"] += 1
        else:
            counts["pending"] += 1
    return counts


def coverage(store: WorkflowStore) -> CoverageReport:
    """The labeled/unlabeled partition of a finalized store."""
    if not store.finalized:
        raise ValueError("coverage requires a finalized store")
    counts = partition_counts(store)
    return CoverageReport(
        total=len(store.records),
        model_labeled=counts["model"],
        search_labeled=counts["search"],
        unlabeled=counts["unlabeled"],
        wapis_overlap=counts["overlap"],
    )


def model_accuracy(report: CoverageReport) -> Fraction | None:
    """Model-labeled share of all labeled mentions, exact; None when nothing is labeled."""
    labeled = report.model_labeled + report.search_labeled
    if labeled == 0:
        return None
    return Fraction(report.model_labeled, labeled)


def _labeled(record) -> bool:
    return record.state in (WorkflowState.MODEL_ACCEPTED, WorkflowState.SEARCH_ACCEPTED)


def _mention_units(store: WorkflowStore, dimension: str):
    """Yield (key, labeled) pairs, one per counting unit of the dimension.

    morph_tag counts words (tokens inside mentions); every other dimension
    counts mentions. unlabeled_* dimensions cover Unlabeled records only.
    """
    for mention_id, record in store.records.items():
        mention = store.mentions[mention_id]
        labeled = _labeled(record)
        if dimension == "label_language":
            if record.label is not None:
                yield record.label.language, labeled
        elif dimension == "subcategory":
            yield store.subcategories.get(mention.doc_id, "unknown"), labeled
        elif dimension == "ne_type":
            yield mention.ne_type, labeled
        elif dimension == "morph_tag":
            for tag in mention.morph_tags:
                yield (tag if tag is not None else NO_MORPH_KEY), labeled
        elif dimension == "unlabeled_category":
            if record.state == WorkflowState.UNLABELED:
                tag = record.unlabeled_tag
                yield (tag.category if tag is not None else UNTAGGED_KEY), labeled
        elif dimension == "unlabeled_factor":
            if record.state == WorkflowState.UNLABELED and record.unlabeled_tag is not None:
                for factor in sorted(record.unlabeled_tag.factors):
                    yield factor, labeled
        else:
            raise ValueError(f"unknown dimension {dimension!r}")


def _composition_denominator(store: WorkflowStore, dimension: str) -> int:
    if dimension == "label_language":
        return sum(1 for r in store.records.values() if _labeled(r))
    if dimension in ("subcategory", "ne_type"):
        return len(store.records)
    if dimension == "morph_tag":
        return sum(len(store.mentions[mid].morph_tags) for mid in store.records)
    if dimension in ("unlabeled_category", "unlabeled_factor"):
        return sum(
            1 for r in store.records.values() if r.state == WorkflowState.UNLABELED
        )
    raise ValueError(f"unknown dimension {dimension!r}")


def breakdown(
    store: WorkflowStore, dimension: str, measure: str = "composition_share"
) -> list[BreakdownRow]:
    """Per-key rows for one dimension, sorted by count desc then key asc.

    composition_share: key's unit count over the dimension's denominator.
    coverage_share: key's labeled units over the key's own unit count.
    """
    if not store.finalized:
        raise ValueError("breakdowns require a finalized store")
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}")
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")

    totals: dict[str, int] = {}
    labeled_counts: dict[str, int] = {}
    for key, labeled in _mention_units(store, dimension):
        totals[key] = totals.get(key, 0) + 1
        if labeled:
            labeled_counts[key] = labeled_counts.get(key, 0) + 1

    def note_for(key: str) -> str:
        if dimension == "subcategory" and key in store.skew_subcategories:
            return "skew_warning"
        return ""

    rows = []
    if measure == "composition_share":
        denominator = _composition_denominator(store, dimension)
        for key, count in totals.items():
            share = Fraction(count, denominator) if denominator else Fraction(0)
            rows.append(BreakdownRow(key=key, count=count, share=share, note=note_for(key)))
    else:
        for key, total in totals.items():
            count = labeled_counts.get(key, 0)
            rows.append(
                BreakdownRow(key=key, count=count, share=Fraction(count, total), note=note_for(key))
            )
    rows.sort(key=lambda r: (-r.count, r.key))
    return rows


def collapse_rows(
    rows: list[BreakdownRow], threshold: int = DEFAULT_COLLAPSE_THRESHOLD
) -> list[BreakdownRow]:
    """Fold composition rows with count < threshold into one "other" row."""
    kept = [r for r in rows if r.count >= threshold]
    small = [r for r in rows if r.count < threshold]
    if small:
        count = sum(r.count for r in small)
        share = sum((r.share for r in small), Fraction(0))
        kept.append(BreakdownRow(key=OTHER_KEY, count=count, share=share))
        kept.sort(key=lambda r: (-r.count, r.key))
    return kept


COVERAGE_FIELDS = (
    "total",
    "model_labeled",
    "search_labeled",
    "unlabeled",
    "wapis_overlap",
    "wapis_total",
)


def render(report_or_rows, fmt: str = "tsv") -> str:
    """Deterministic text rendering of a CoverageReport or breakdown rows.

    tsv: tab-separated with a header row. json-lines: one canonical JSON
    object per row. plot-data: bare key/value columns for external plotting.
    """
    if isinstance(report_or_rows, CoverageReport):
        return _render_coverage(report_or_rows, fmt)
    return _render_rows(list(report_or_rows), fmt)


def _accuracy_pct(report: CoverageReport) -> str:
    accuracy = report.model_accuracy
    return "" if accuracy is None else pct_display(accuracy)


def _render_coverage(report: CoverageReport, fmt: str) -> str:
    pcts = report.percentages
    if fmt == "tsv":
        lines = ["metric\tvalue"]
        for name in COVERAGE_FIELDS:
            lines.append(f"{name}\t{getattr(report, name)}")
        for name in ("model_labeled", "search_labeled", "unlabeled", "wapis_overlap", "wapis_total"):
            lines.append(f"pct_{name}\t{pcts[name]}")
        lines.append(f"pct_model_accuracy\t{_accuracy_pct(report)}")
        return "\n".join(lines) + "\n"
    if fmt == "json-lines":
        payload = {name: getattr(report, name) for name in COVERAGE_FIELDS}
        payload["percentages"] = pcts
        payload["pct_model_accuracy"] = _accuracy_pct(report)
        return json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n"
    if fmt == "plot-data":
        lines = ["key\tvalue"]
        for name in ("model_labeled", "search_labeled", "unlabeled"):
            lines.append(f"{name}\t{pcts[name]}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _render_rows(rows: list[BreakdownRow], fmt: str) -> str:
    if fmt == "tsv":
        lines = ["key\tcount\tshare_pct\tnote"]
        for row in rows:
            lines.append(f"{row.key}\t{row.count}\t{row.share_pct}\t{row.note}")
        return "\n".join(lines) + "\n"
    if fmt == "json-lines":
        lines = []
        for row in rows:
            lines.append(
                json.dumps(
                    {"key": row.key, "count": row.count, "share_pct": row.share_pct,
                     "note": row.note},
                    ensure_ascii=False,
                    sort_keys=True,
                )
            )
        return ("\n".join(lines) + "\n") if lines else ""
    if fmt == "plot-data":
        lines = ["key\tvalue"]
        for row in rows:
            lines.append(f"{row.key}\t{row.share_pct}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")

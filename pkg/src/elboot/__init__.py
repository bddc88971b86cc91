"""elboot: bootstrap an entity-linking corpus from a NER corpus.

Pipeline: ingest CoNLL -> model candidate suggestions (external backend over
a wire protocol) -> Wikipedia-search fallback -> human review over HTTP ->
Wikidata resolution -> finalized export plus coverage analytics.
"""

from .corpus import Document, Mention, Token, extract_mentions, filter_linkable, parse_conll
from .protocol import Candidate, GeneratorRequest
from .resolver import NotFound, ResolvedEntity
from .stats import BreakdownRow, CoverageReport
from .wapis import SearchQuery, SearchResult
from .workflow import UnlabeledTag, WorkflowRecord, WorkflowState, WorkflowStore

__version__ = "0.1.0"

__all__ = [
    "BreakdownRow",
    "Candidate",
    "CoverageReport",
    "Document",
    "GeneratorRequest",
    "Mention",
    "NotFound",
    "ResolvedEntity",
    "SearchQuery",
    "SearchResult",
    "Token",
    "UnlabeledTag",
    "WorkflowRecord",
    "WorkflowState",
    "WorkflowStore",
    "extract_mentions",
    "filter_linkable",
    "parse_conll",
]

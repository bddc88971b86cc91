"""CoNLL corpus ingestion: parse BIO-tagged token streams into documents,
extract entity mentions with sentence-bounded context windows, and filter
down to the linkable types.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

NE_TYPES = frozenset(
    {"Person", "Location", "Organization", "Miscellaneous", "Date", "Time", "Money", "Percent"}
)
LINKABLE_TYPES = frozenset({"Person", "Location", "Organization", "Miscellaneous"})

DEFAULT_DOC_MARKER = "# newdoc"
DEFAULT_CONTEXT_CHARS = 256

_TAG_RE = re.compile(r"^(O|[BI]-\S+)$")
_MARKER_RE = re.compile(r"id\s*=\s*(\S+)(?:\s+subcat\s*=\s*(.+?))?\s*$")


class ParseError(ValueError):
    """Malformed CoNLL input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Token:
    surface: str
    ner_tag: str
    morph_tag: str | None = None
    index: int = 0


@dataclass
class Document:
    id: str
    subcategory: str
    sentences: list[list[Token]] = field(default_factory=list)


@dataclass(frozen=True)
class Mention:
    """A contiguous NE span with its sentence-bounded context."""

    id: str
    doc_id: str
    sentence_index: int
    token_span: tuple[int, int]
    surface: str
    ne_type: str
    left_context: str
    right_context: str
    morph_tags: tuple[str | None, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "doc_id": self.doc_id,
            "sentence_index": self.sentence_index,
            "token_span": list(self.token_span),
            "surface": self.surface,
            "ne_type": self.ne_type,
            "left_context": self.left_context,
            "right_context": self.right_context,
            "morph_tags": list(self.morph_tags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Mention":
        return cls(
            id=data["id"],
            doc_id=data["doc_id"],
            sentence_index=data["sentence_index"],
            token_span=tuple(data["token_span"]),
            surface=data["surface"],
            ne_type=data["ne_type"],
            left_context=data["left_context"],
            right_context=data["right_context"],
            morph_tags=tuple(data["morph_tags"]),
        )


def parse_conll(
    lines: Iterable[str],
    doc_marker: str = DEFAULT_DOC_MARKER,
    types: frozenset[str] | None = NE_TYPES,
) -> list[Document]:
    """Parse a line-oriented CoNLL stream into documents.

    One token per line (surface, NER tag, optional morph tag, whitespace
    separated); a blank line ends a sentence; lines starting with the
    document marker open a new document; other `#` lines are comments.
    Input with no marker goes into an implicit `doc1`.

    Raises ParseError (with line number) for a missing or malformed tag
    column, or for a tag type outside `types` when given.
    """
    documents: list[Document] = []
    seen_ids: set[str] = set()
    current: Document | None = None
    sentence: list[Token] = []

    def close_sentence() -> None:
        nonlocal sentence, current
        if sentence:
            assert current is not None
            current.sentences.append(sentence)
            sentence = []

    def open_document(doc_id: str, subcat: str, line_no: int) -> Document:
        if doc_id in seen_ids:
            raise ParseError(line_no, f"duplicate document id {doc_id!r}")
        seen_ids.add(doc_id)
        doc = Document(id=doc_id, subcategory=subcat)
        documents.append(doc)
        return doc

    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        # a marker must be the marker string followed by whitespace, so that
        # ordinary comments sharing the prefix ("# newdocument ...") pass through
        if line.startswith(doc_marker) and line[len(doc_marker):][:1].isspace():
            close_sentence()
            match = _MARKER_RE.search(line[len(doc_marker):])
            if match is None:
                raise ParseError(line_no, "document marker without an id")
            doc_id = match.group(1)
            subcat = (match.group(2) or "unknown").strip()
            current = open_document(doc_id, subcat, line_no)
            continue
        if line.startswith("#"):
            continue
        if not line.strip():
            close_sentence()
            continue
        cols = line.split()
        if len(cols) < 2:
            raise ParseError(line_no, f"expected a tag column after {cols[0]!r}")
        surface, tag = cols[0], cols[1]
        morph = cols[2] if len(cols) > 2 else None
        if not _TAG_RE.match(tag):
            raise ParseError(line_no, f"malformed NER tag {tag!r}")
        if tag != "O" and types is not None and tag[2:] not in types:
            raise ParseError(line_no, f"unknown NE type in tag {tag!r}")
        if current is None:
            current = open_document("doc1", "unknown", line_no)
        sentence.append(Token(surface=surface, ner_tag=tag, morph_tag=morph, index=len(sentence)))
    close_sentence()
    return documents


def to_conll(documents: Iterable[Document], doc_marker: str = DEFAULT_DOC_MARKER) -> str:
    """Serialize documents back to CoNLL text (tab-separated columns)."""
    out: list[str] = []
    for doc in documents:
        out.append(f"{doc_marker} id = {doc.id} subcat = {doc.subcategory}")
        for tokens in doc.sentences:
            for tok in tokens:
                cols = [tok.surface, tok.ner_tag]
                if tok.morph_tag is not None:
                    cols.append(tok.morph_tag)
                out.append("\t".join(cols))
            out.append("")
    return "\n".join(out) + ("\n" if out else "")


def parse_conll_file(path: str, **kwargs) -> list[Document]:
    """Parse a UTF-8 CoNLL file; raises UnicodeDecodeError on bad encoding."""
    with open(path, encoding="utf-8", errors="strict") as fh:
        return parse_conll(fh, **kwargs)


def _bio_spans(tags: list[str]) -> Iterator[tuple[int, int, str]]:
    """Yield (start, end, type) for maximal BIO runs; an orphan I opens a run."""
    start = -1
    current_type = ""
    for i, tag in enumerate(tags):
        if tag == "O":
            if start >= 0:
                yield start, i, current_type
                start = -1
            continue
        kind, typ = tag[0], tag[2:]
        if kind == "B" or typ != current_type or start < 0:
            if start >= 0:
                yield start, i, current_type
            start, current_type = i, typ
    if start >= 0:
        yield start, len(tags), current_type


def build_context(
    tokens: list[Token], span: tuple[int, int], window_chars: int = DEFAULT_CONTEXT_CHARS
) -> tuple[str, str]:
    """Sentence-bounded context strings around a token span.

    Each side is truncated to `window_chars` characters at word boundaries
    but always keeps at least the word nearest the span; the span's own
    surface is never included.
    """
    if window_chars <= 0:
        raise ValueError("window_chars must be positive")
    start, end = span

    def take(words: list[str]) -> list[str]:
        # words ordered nearest-to-span first
        kept: list[str] = []
        length = 0
        for word in words:
            added = len(word) if not kept else length + 1 + len(word)
            if kept and added > window_chars:
                break
            kept.append(word)
            length = added
        return kept

    left_words = take([t.surface for t in tokens[:start]][::-1])[::-1]
    right_words = take([t.surface for t in tokens[end:]])
    return " ".join(left_words), " ".join(right_words)


def extract_mentions(doc: Document, window_chars: int = DEFAULT_CONTEXT_CHARS) -> list[Mention]:
    """Extract one mention per maximal BIO run, with contexts attached.

    Lenient: an I tag without a preceding B of the same type starts a new
    mention, so extraction never fails on real-world tag noise.
    """
    mentions: list[Mention] = []
    for si, tokens in enumerate(doc.sentences):
        tags = [t.ner_tag for t in tokens]
        for start, end, ne_type in _bio_spans(tags):
            left, right = build_context(tokens, (start, end), window_chars)
            mentions.append(
                Mention(
                    id=f"{doc.id}:{si}:{start}-{end}",
                    doc_id=doc.id,
                    sentence_index=si,
                    token_span=(start, end),
                    surface=" ".join(t.surface for t in tokens[start:end]),
                    ne_type=ne_type,
                    left_context=left,
                    right_context=right,
                    morph_tags=tuple(t.morph_tag for t in tokens[start:end]),
                )
            )
    return mentions


def filter_linkable(mentions: Iterable[Mention]) -> list[Mention]:
    """Keep Person/Location/Organization/Miscellaneous mentions, in order."""
    return [m for m in mentions if m.ne_type in LINKABLE_TYPES]

from __future__ import annotations

import random
import re

import pytest

from elboot.corpus import (
    Document,
    ParseError,
    Token,
    build_context,
    extract_mentions,
    filter_linkable,
    parse_conll,
    parse_conll_file,
    to_conll,
)

from oracles import brute_force_bio_spans, split_token_lines, truncate_context

NE_TYPE_NAMES = [
    "Person", "Location", "Organization", "Miscellaneous", "Date", "Time", "Money", "Percent",
]


def doc_from_tags(tags: list[str], doc_id: str = "d") -> Document:
    tokens = [Token(surface=f"w{i}", ner_tag=t, index=i) for i, t in enumerate(tags)]
    return Document(id=doc_id, subcategory="test", sentences=[tokens])


# ---------------------------------------------------------------- parsing


def test_parse_minimal_two_token_sentence():
    docs = parse_conll(["Barack B-Person", "Obama I-Person", ""])
    assert len(docs) == 1
    (sentence,) = docs[0].sentences
    assert [t.surface for t in sentence] == ["Barack", "Obama"]
    assert [t.ner_tag for t in sentence] == ["B-Person", "I-Person"]
    assert [t.index for t in sentence] == [0, 1]


def test_parse_empty_input():
    assert parse_conll([]) == []


def test_parse_matches_line_splitting_oracle():
    lines = [
        "Hann O",
        "fór O",
        "til O",
        "New B-Location",
        "York I-Location",
        "Reykjavík B-Location",
        "",
        "Þetta O nhen",
        "er O sfg3en",
        "gott O lhensf",
    ]
    docs = parse_conll(lines)
    expected = split_token_lines(lines)
    got = [
        [(t.surface, t.ner_tag, t.morph_tag) for t in sentence]
        for doc in docs
        for sentence in doc.sentences
    ]
    assert got == expected


def test_parse_document_markers():
    lines = [
        "# newdoc id = blogs-001 subcat = blogs",
        "Halló O",
        "",
        "# newdoc id = news-001 subcat = news",
        "Fréttir O",
        "",
    ]
    docs = parse_conll(lines)
    assert [(d.id, d.subcategory) for d in docs] == [("blogs-001", "blogs"), ("news-001", "news")]
    assert all(len(d.sentences) == 1 for d in docs)


def test_parse_markerless_input_gets_implicit_document():
    docs = parse_conll(["Orð O", ""])
    assert docs[0].id == "doc1"
    assert docs[0].subcategory == "unknown"


def test_parse_comment_lines_skipped():
    docs = parse_conll(["# just a note", "Orð O", ""])
    assert len(docs[0].sentences[0]) == 1


def test_comment_sharing_marker_prefix_is_not_a_marker():
    docs = parse_conll(["# newdocumentation pending", "Orð O", ""])
    assert [d.id for d in docs] == ["doc1"]


def test_marker_without_id_is_error():
    with pytest.raises(ParseError):
        parse_conll(["# newdoc missing everything"])


def test_parse_malformed_tag_reports_line_number():
    with pytest.raises(ParseError) as err:
        parse_conll(["Orð O", "Slæmt X-Person"])
    assert err.value.line_no == 2


def test_parse_missing_tag_column_is_error():
    with pytest.raises(ParseError) as err:
        parse_conll(["bara_orð"])
    assert err.value.line_no == 1


def test_parse_unknown_type_rejected_by_default_but_configurable():
    with pytest.raises(ParseError):
        parse_conll(["Orð B-Gadget"])
    docs = parse_conll(["Orð B-Gadget", ""], types=None)
    assert docs[0].sentences[0][0].ner_tag == "B-Gadget"


def test_parse_duplicate_document_id_is_error():
    lines = ["# newdoc id = a subcat = x", "Orð O", "", "# newdoc id = a subcat = y"]
    with pytest.raises(ParseError):
        parse_conll(lines)


def test_parse_non_utf8_file_raises_encoding_error(tmp_path):
    path = tmp_path / "bad.conll"
    path.write_bytes(b"Or\xf0 O\n")  # latin-1 eth
    with pytest.raises(UnicodeDecodeError):
        parse_conll_file(str(path))


def test_roundtrip_byte_identical_modulo_whitespace():
    original = [
        "# newdoc id = d1 subcat = books",
        "Barack\tB-Person\tnken",
        "Obama  I-Person  nken",
        "",
        "las O",
        "",
    ]
    docs = parse_conll(original)
    serialized = to_conll(docs)
    assert parse_conll(serialized.splitlines()) == docs

    def normalize(lines):
        return [re.sub(r"[ \t]+", " ", line).strip() for line in lines if line.strip()]

    assert normalize(serialized.splitlines()) == normalize(original)


# ----------------------------------------------------------- BIO extraction


def test_extract_single_merge():
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[[
            Token("Barack", "B-Person", index=0),
            Token("Obama", "I-Person", index=1),
        ]],
    )
    (mention,) = extract_mentions(doc)
    assert mention.surface == "Barack Obama"
    assert mention.token_span == (0, 2)
    assert mention.ne_type == "Person"


def test_extract_adjacent_b_tags_start_new_mentions():
    doc = doc_from_tags(["B-Location", "B-Location"])
    mentions = extract_mentions(doc)
    assert [m.token_span for m in mentions] == [(0, 1), (1, 2)]


def test_extract_orphan_i_opens_mention():
    doc = doc_from_tags(["O", "I-Person", "I-Person", "O"])
    (mention,) = extract_mentions(doc)
    assert mention.token_span == (1, 3)


def test_extract_type_switch_splits_runs():
    doc = doc_from_tags(["B-Person", "I-Location", "I-Location"])
    mentions = extract_mentions(doc)
    assert [(m.token_span, m.ne_type) for m in mentions] == [
        ((0, 1), "Person"),
        ((1, 3), "Location"),
    ]


def random_tags(rng: random.Random, length: int) -> list[str]:
    tags = []
    for _ in range(length):
        roll = rng.random()
        if roll < 0.5:
            tags.append("O")
        elif roll < 0.75:
            tags.append(f"B-{rng.choice(NE_TYPE_NAMES)}")
        else:
            tags.append(f"I-{rng.choice(NE_TYPE_NAMES)}")
    return tags


def test_extract_matches_brute_force_oracle_on_50_sentences():
    rng = random.Random(1307)
    sentences = [random_tags(rng, rng.randint(1, 30)) for _ in range(50)]
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[
            [Token(f"w{i}", tag, index=i) for i, tag in enumerate(tags)] for tags in sentences
        ],
    )
    mentions = extract_mentions(doc)
    got = {}
    for m in mentions:
        got.setdefault(m.sentence_index, []).append((m.token_span[0], m.token_span[1], m.ne_type))
    for si, tags in enumerate(sentences):
        assert got.get(si, []) == brute_force_bio_spans(tags), f"sentence {si}: {tags}"


def test_extract_count_property():
    rng = random.Random(99)
    for _ in range(200):
        tags = random_tags(rng, rng.randint(0, 40))
        doc = doc_from_tags(tags)
        b_count = sum(1 for t in tags if t.startswith("B-"))
        orphan_runs = sum(
            1
            for i, t in enumerate(tags)
            if t.startswith("I-")
            and (i == 0 or tags[i - 1] not in (f"B-{t[2:]}", f"I-{t[2:]}"))
        )
        assert len(extract_mentions(doc)) == b_count + orphan_runs


# ------------------------------------------------------------- filtering


def test_filter_keeps_linkable_types_in_order():
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[[
            Token("a", "B-Person", index=0),
            Token("b", "B-Date", index=1),
            Token("c", "B-Location", index=2),
        ]],
    )
    kept = filter_linkable(extract_mentions(doc))
    assert [m.ne_type for m in kept] == ["Person", "Location"]


def test_filter_empty():
    assert filter_linkable([]) == []


def test_filter_drops_all_excluded_types():
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[[
            Token("a", "B-Money", index=0),
            Token("b", "B-Percent", index=1),
            Token("c", "B-Time", index=2),
            Token("d", "B-Date", index=3),
        ]],
    )
    assert filter_linkable(extract_mentions(doc)) == []


def test_filter_is_subset_and_idempotent():
    rng = random.Random(7)
    doc = doc_from_tags(random_tags(rng, 60))
    mentions = extract_mentions(doc)
    once = filter_linkable(mentions)
    assert set(m.id for m in once) <= set(m.id for m in mentions)
    assert filter_linkable(once) == once


# ------------------------------------------------------------- contexts


def test_context_empty_at_sentence_start():
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[[Token("Obama", "B-Person", index=0), Token("talaði", "O", index=1)]],
    )
    (mention,) = extract_mentions(doc)
    assert mention.left_context == ""
    assert mention.right_context == "talaði"


def test_context_keeps_at_least_one_word():
    tokens = [Token("langtorðanotað", "O", index=0), Token("X", "B-Person", index=1)]
    left, right = build_context(tokens, (1, 2), window_chars=1)
    assert left == "langtorðanotað"
    assert right == ""


def test_context_rejects_nonpositive_window():
    tokens = [Token("X", "B-Person", index=0)]
    with pytest.raises(ValueError):
        build_context(tokens, (0, 1), window_chars=0)


def test_context_matches_truncation_oracle_on_40_word_sentence():
    rng = random.Random(42)
    words = ["orð%d" % rng.randint(1, 999) for _ in range(40)]
    tokens = [Token(w, "O", index=i) for i, w in enumerate(words)]
    span = (18, 20)
    left, right = build_context(tokens, span, window_chars=64)
    left_expect = truncate_context(words[: span[0]][::-1], 64)[::-1]
    right_expect = truncate_context(words[span[1]:], 64)
    assert left == " ".join(left_expect)
    assert right == " ".join(right_expect)
    assert len(left) <= 64 and len(right) <= 64


def test_context_never_contains_mention_surface():
    doc = Document(
        id="d",
        subcategory="s",
        sentences=[[
            Token("fyrir", "O", index=0),
            Token("Einstök", "B-Miscellaneous", index=1),
            Token("eftir", "O", index=2),
        ]],
    )
    (mention,) = extract_mentions(doc)
    assert "Einstök" not in mention.left_context
    assert "Einstök" not in mention.right_context

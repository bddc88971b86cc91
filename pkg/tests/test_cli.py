from __future__ import annotations

import json
import sys

import pytest
from click.testing import CliRunner

from elboot.cache import FileCache
from elboot.cli import main
from elboot.config import Config
from elboot.corpus import extract_mentions, filter_linkable, parse_conll
from elboot.service import ReviewService
from elboot.workflow import UnlabeledTag, WorkflowState, WorkflowStore

CONLL = """\
# newdoc id = d1 subcat = books
Skáldið\tO
Halldór\tB-Person
Laxness\tI-Person
fékk\tO
verðlaunin\tO

Ég\tO
heimsótti\tO
Reykjavík\tB-Location
í\tO
fyrra\tO

# newdoc id = d2 subcat = blogs
Við\tO
drukkum\tO
Mersault\tB-Miscellaneous
árið\tO
1984\tB-Date
"""


@pytest.fixture
def pipeline_env(tmp_path, opensearch_fixtures, pageprops_fixtures):
    corpus_path = tmp_path / "corpus.conll"
    corpus_path.write_text(CONLL, encoding="utf-8")

    config_path = tmp_path / "config.json"
    data_dir = tmp_path / "data"
    config_path.write_text(json.dumps({"data_dir": str(data_dir)}), encoding="utf-8")
    cfg = Config(data_dir=str(data_dir))

    # mention ids are deterministic; derive them the same way ingest does
    docs = parse_conll(CONLL.splitlines())
    mentions = filter_linkable(
        [m for d in docs for m in extract_mentions(d, cfg.context_window_chars)]
    )
    ids = {m.surface: m.id for m in mentions}

    backend_fixture = tmp_path / "backend.json"
    backend_fixture.write_text(
        json.dumps(
            {
                ids["Halldór Laxness"]: [
                    {"lang": "is", "title": "Halldór Laxness", "score": 0.97}
                ],
                ids["Reykjavík"]: [{"lang": "en", "title": "Reykjavík", "score": 0.91}],
                # Mersault: the model proposes nothing
            }
        ),
        encoding="utf-8",
    )

    # warm the caches so the run never leaves the machine
    wapis_cache = FileCache(cfg.cache_dir / "wapis", ttl=10**9)
    for host, texts in opensearch_fixtures.items():
        for text, body in texts.items():
            wapis_cache.put(host, text, body)
    resolve_cache = FileCache(cfg.cache_dir / "resolve", ttl=10**9)
    for host, titles in pageprops_fixtures.items():
        for title, body in titles.items():
            resolve_cache.put(host, title, body)

    return {
        "corpus": corpus_path,
        "config": config_path,
        "cfg": cfg,
        "ids": ids,
        "backend": backend_fixture,
    }


def run_cli(config_path, *args) -> str:
    runner = CliRunner()
    result = runner.invoke(main, ["--config", str(config_path), *args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


def test_full_pipeline_offline(pipeline_env):
    config, cfg, ids = pipeline_env["config"], pipeline_env["cfg"], pipeline_env["ids"]

    out = run_cli(config, "ingest", str(pipeline_env["corpus"]))
    assert "2 documents" in out and "3 linkable" in out

    backend_cmd = f"{sys.executable} -m elboot mock-backend {pipeline_env['backend']}"
    out = run_cli(config, "suggest", "--backend", backend_cmd)
    assert "2 of 3 mentions queued for review" in out

    # model review round: accept Laxness, reject Reykjavík
    store = WorkflowStore.load(cfg.journal_path)
    service = ReviewService(store)
    items = {i["surface"]: i for i in service.get_queue("model_review", "a1", 10)}
    assert set(items) == {"Halldór Laxness", "Reykjavík"}
    assert items["Halldór Laxness"]["candidates"][0]["qid"] == "Q93354"
    service.post_decision(items["Halldór Laxness"]["lease_token"], {"action": "accept"})
    service.post_decision(items["Reykjavík"]["lease_token"], {"action": "reject"})
    store.journal.close()

    out = run_cli(config, "wapis")
    assert "3 mentions queried" in out  # accepted (overlap) + rejected + empty-model

    # search review round: pick the Icelandic Reykjavík entry
    store = WorkflowStore.load(cfg.journal_path)
    service = ReviewService(store)
    (item,) = service.get_queue("search_review", "a2", 10)
    assert item["surface"] == "Reykjavík"
    assert item["candidates"][0]["language"] == "is"
    service.post_decision(item["lease_token"], {"action": "select", "index": 0})

    record = store.records[ids["Halldór Laxness"]]
    assert record.state == WorkflowState.MODEL_ACCEPTED
    assert record.overlap is True  # Q93354 also surfaced by the search round
    store.journal.close()

    out = run_cli(config, "finalize")
    assert "model 1" in out and "search 1" in out and "unlabeled 1" in out

    # tag the leftover Mersault mention (misspelled wine)
    store = WorkflowStore.load(cfg.journal_path)
    store.tag_unlabeled(
        ids["Mersault"],
        UnlabeledTag(category="brand", factors=frozenset({"misspelling"})),
        "a1",
    )
    store.journal.close()

    stats_out = run_cli(config, "stats")
    assert "pct_model_labeled\t33.3" in stats_out
    assert "pct_wapis_total\t66.7" in stats_out  # overlap 1 + search 1 of 3

    breakdown_out = run_cli(config, "stats", "--dimension", "subcategory", "--measure",
                            "coverage_share")
    assert "books\t2\t100.0" in breakdown_out
    assert "blogs\t0\t0.0" in breakdown_out

    export_out = run_cli(config, "export")
    rows = [line.split("\t") for line in export_out.strip().split("\n")]
    by_surface = {row[3]: row for row in rows[1:]}
    assert by_surface["Halldór Laxness"][5] == "Q93354"  # correct_wiki
    assert by_surface["Reykjavík"][6] == "Q1764"  # suggestion_wiki
    assert by_surface["Mersault"][5] == "" and by_surface["Mersault"][6] == ""
    assert "1984" not in by_surface  # Date mentions never enter the store


def test_ingest_refuses_to_overwrite(pipeline_env):
    config = pipeline_env["config"]
    run_cli(config, "ingest", str(pipeline_env["corpus"]))
    runner = CliRunner()
    result = runner.invoke(main, ["--config", str(config), "ingest", str(pipeline_env["corpus"])])
    assert result.exit_code != 0
    assert "refusing" in result.output


def test_commands_require_ingest_first(pipeline_env):
    runner = CliRunner()
    result = runner.invoke(main, ["--config", str(pipeline_env["config"]), "finalize"])
    assert result.exit_code != 0
    assert "elboot ingest" in result.output

"""Command-line driver for the corpus bootstrapping pipeline.

Typical run:
    elboot ingest corpus/*.conll
    elboot suggest --backend "python backend.py"   # or an http(s) URL
    elboot wapis
    elboot serve --addr 127.0.0.1:8080             # human review rounds
    elboot finalize
    elboot stats --dimension ne_type --measure coverage_share
    elboot export --out corpus.tsv
"""

from __future__ import annotations

import json
import logging
import sys

import click

from . import corpus, generator, resolver, stats, wapis
from .cache import FileCache
from .config import Config, load_config
from .protocol import (
    ProtocolError,
    decode_request_record,
    encode_response_record,
)
from .protocol import Candidate
from .resolver import ResolvedEntity
from .service import ReviewService
from .transport import RateLimiter, RequestsTransport
from .workflow import JournalWriter, WorkflowState, WorkflowStore

logger = logging.getLogger(__name__)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON config file (default: $ELBOOT_CONFIG or built-in defaults).")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = load_config(config_path)


def _load_store(cfg: Config) -> WorkflowStore:
    if not cfg.journal_path.exists():
        raise click.ClickException(
            f"no journal at {cfg.journal_path}; run `elboot ingest` first"
        )
    return WorkflowStore.load(
        cfg.journal_path, preferred_languages=tuple(cfg.preferred_languages)
    )


def _wiki_clients(cfg: Config, kind: str) -> tuple[FileCache, RequestsTransport, RateLimiter]:
    cache = FileCache(cfg.cache_dir / kind, ttl=cfg.cache_ttl_seconds)
    return cache, RequestsTransport(), RateLimiter(rate=cfg.rate_limit_per_host)


@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def ingest(cfg: Config, files: tuple[str, ...]) -> None:
    """Parse CoNLL FILES and initialize the annotation store."""
    if cfg.journal_path.exists():
        raise click.ClickException(
            f"journal {cfg.journal_path} already exists; refusing to re-initialize"
        )
    documents: list[corpus.Document] = []
    for path in files:
        documents.extend(corpus.parse_conll_file(path, doc_marker=cfg.doc_marker))
    seen = set()
    for doc in documents:
        if doc.id in seen:
            raise click.ClickException(f"duplicate document id {doc.id!r} across inputs")
        seen.add(doc.id)
    mentions = []
    for doc in documents:
        mentions.extend(corpus.extract_mentions(doc, window_chars=cfg.context_window_chars))
    linkable = corpus.filter_linkable(mentions)
    store = WorkflowStore(
        journal=JournalWriter(cfg.journal_path),
        preferred_languages=tuple(cfg.preferred_languages),
    )
    store.init(
        mentions,
        subcategories={d.id: d.subcategory for d in documents},
        skew_subcategories=cfg.skew_subcategories,
    )
    click.echo(
        f"ingested {len(documents)} documents, {len(mentions)} mentions "
        f"({len(linkable)} linkable) -> {cfg.journal_path}"
    )


@main.command()
@click.option("--backend", required=True,
              help="Generator endpoint: a shell command (stdio) or an http(s) URL.")
@click.pass_obj
def suggest(cfg: Config, backend: str) -> None:
    """Run the model round: candidates for every fresh Pending mention."""
    store = _load_store(cfg)
    pending = [
        store.mentions[mid]
        for mid, record in store.records.items()
        if record.state == WorkflowState.PENDING and record.model_candidates is None
    ]
    if not pending:
        click.echo("nothing to suggest")
        return
    if backend.startswith(("http://", "https://")):
        endpoint = generator.HttpBackend(backend)
    else:
        endpoint = generator.ProcessBackend(backend)
    with endpoint:
        results = generator.run_batch(
            pending,
            endpoint,
            max_candidates=cfg.max_candidates,
            fanout=cfg.generator_fanout,
            timeout=cfg.generator_timeout_seconds,
        )
    cache, transport, limiter = _wiki_clients(cfg, "resolve")
    tops = sorted(
        {
            (candidates[0].language, candidates[0].title)
            for candidates in (results[m.id] for m in pending)
            if candidates
        }
    )
    resolved = resolver.batch_resolve(tops, cache, transport, limiter)
    suggested = 0
    for mention in pending:
        candidates = results[mention.id]
        top_resolution = None
        if candidates:
            res = resolved.get((candidates[0].language, candidates[0].title))
            if isinstance(res, ResolvedEntity):
                top_resolution = res
        state = store.record_model_suggestion(mention.id, candidates, top_resolution)
        if state == WorkflowState.MODEL_SUGGESTED:
            suggested += 1
    click.echo(f"model round: {suggested} of {len(pending)} mentions queued for review")


@main.command(name="wapis")
@click.option("--refresh", is_flag=True, help="Re-query mentions that already have search results.")
@click.pass_obj
def wapis_cmd(cfg: Config, refresh: bool) -> None:
    """Run the search fallback round and compute model/search overlap."""
    store = _load_store(cfg)
    eligible = [
        (mid, record)
        for mid, record in store.records.items()
        if (record.search_eligible or record.state == WorkflowState.MODEL_ACCEPTED)
        and (refresh or record.search_candidates is None)
    ]
    if not eligible:
        click.echo("nothing to search")
        return
    cache, transport, limiter = _wiki_clients(cfg, "wapis")
    rcache, rtransport, rlimiter = _wiki_clients(cfg, "resolve")
    hosts = tuple(cfg.hosts)
    searched: dict[str, wapis.SearchResult] = {}
    pairs: set[tuple[str, str]] = set()
    for mid, _ in eligible:
        query = wapis.SearchQuery(
            text=store.mentions[mid].surface, hosts=hosts, limit=cfg.search_limit
        )
        result = wapis.search(query, cache, transport, limiter)
        searched[mid] = result
        pairs.update((c.language, c.title) for c in result.candidates)
    resolutions = resolver.batch_resolve(sorted(pairs), rcache, rtransport, rlimiter)
    moved = 0
    for mid, record in eligible:
        state = store.attach_search_results(mid, searched[mid], resolutions)
        if state == WorkflowState.SEARCH_SUGGESTED:
            moved += 1
    click.echo(f"search round: {len(eligible)} mentions queried, {moved} queued for review")


@main.command()
@click.pass_obj
def finalize(cfg: Config) -> None:
    """Mark every undecided mention Unlabeled and freeze the partition."""
    store = _load_store(cfg)
    store.finalize()
    report = stats.coverage(store)
    pcts = report.percentages
    click.echo(
        f"finalized {report.total} mentions: "
        f"model {report.model_labeled} ({pcts['model_labeled']}%), "
        f"search {report.search_labeled} ({pcts['search_labeled']}%), "
        f"unlabeled {report.unlabeled} ({pcts['unlabeled']}%)"
    )


@main.command(name="stats")
@click.option("--dimension", type=click.Choice(stats.DIMENSIONS), default=None,
              help="Breakdown dimension; omit for the overall coverage report.")
@click.option("--measure", type=click.Choice(stats.MEASURES), default="composition_share")
@click.option("--format", "fmt", type=click.Choice(["tsv", "json-lines", "plot-data"]),
              default="tsv")
@click.option("--collapse-below", type=int, default=0,
              help="Fold composition rows with fewer records into 'other'.")
@click.pass_obj
def stats_cmd(cfg: Config, dimension: str | None, measure: str, fmt: str, collapse_below: int) -> None:
    """Coverage report or a per-dimension breakdown."""
    store = _load_store(cfg)
    if dimension is None:
        click.echo(stats.render(stats.coverage(store), fmt), nl=False)
        return
    rows = stats.breakdown(store, dimension, measure)
    if collapse_below > 0 and measure == "composition_share":
        rows = stats.collapse_rows(rows, collapse_below)
    click.echo(stats.render(rows, fmt), nl=False)


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output path (default: stdout).")
@click.pass_obj
def export(cfg: Config, out: str | None) -> None:
    """Write the finalized corpus as TSV."""
    store = _load_store(cfg)
    text = store.export_tsv()
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")


@main.command()
@click.option("--addr", default="127.0.0.1:8080", show_default=True, help="host:port to bind.")
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with the review UI bundle to serve at /.")
@click.pass_obj
def serve(cfg: Config, addr: str, ui_dir: str | None) -> None:
    """Serve the review API (and UI) to annotators."""
    import uvicorn

    from .webapp import create_app

    store = _load_store(cfg)
    service = ReviewService(
        store,
        lease_ttl=cfg.lease_ttl_seconds,
        snapshot_dir=cfg.snapshot_dir,
        snapshot_every=cfg.snapshot_every,
    )
    app = create_app(service, auth_token=cfg.auth_token, ui_dir=ui_dir)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080), log_level="info")


@main.command(name="mock-backend")
@click.argument("fixture", type=click.Path(exists=True, dir_okay=False))
def mock_backend(fixture: str) -> None:
    """Serve generator protocol v1 on stdio from a candidates FIXTURE (JSON).

    The fixture maps mention ids to candidate arrays: objects with "lang",
    "title" and optional "score". Useful for dry runs and tests.
    """
    with open(fixture, encoding="utf-8") as fh:
        raw = json.load(fh)
    scripted: dict[str, list[Candidate]] = {}
    for mention_id, items in raw.items():
        scripted[mention_id] = [
            Candidate(source="MODEL", language=item["lang"], title=item["title"],
                      score=item.get("score"))
            for item in items
        ]
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = decode_request_record(line)
        except ProtocolError as exc:
            logger.warning("ignoring malformed request: %s", exc)
            continue
        candidates = scripted.get(request.mention_id, [])[: request.max_candidates]
        sys.stdout.write(encode_response_record(request.mention_id, candidates) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()

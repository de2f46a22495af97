"""Command line entry point: ``hiddenweb``.

Options can also come from environment variables named
``HIDDENWEB_<COMMAND>_<OPTION>`` (for instance ``HIDDENWEB_CRAWL_THRESHOLD``)
and from a JSON config file given with ``--config``, whose top-level keys are
command names mapping option names to values. Flags beat environment
variables, which beat the config file, which beats built-in defaults.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

import click

from .extractor import DataRecord
from .fetcher import FetchError, Fetcher, FetchPolicy
from .forms import WebPage
from .matcher import DEFAULT_THRESHOLD, LabelLexicon, LexiconError, default_lexicon
from .pipeline import MATCHERS, ConfigError, CrawlConfig, CrawlReport, crawl
from .repository import EmptyCriteria, Repository, StorageError
from .taskdb import EmptyBootstrap, bootstrap as build_task_db

ENV_PREFIX = "HIDDENWEB"


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        data = json.loads(Path(value).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(f"cannot read config {value}: {exc}")
    if not isinstance(data, dict):
        raise click.BadParameter("config file must hold a JSON object")
    ctx.default_map = {**(ctx.default_map or {}), **data}
    return value


@click.group(context_settings={"auto_envvar_prefix": ENV_PREFIX,
                               "help_option_names": ["-h", "--help"]},
             no_args_is_help=True)
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config,
              is_eager=True, expose_value=False, help="JSON file with per-command defaults.")
@click.option("--output", type=click.Choice(["human", "lines"]), default="human",
              show_default=True, help="Aligned text, or one JSON object per line.")
@click.option("-v", "--verbose", count=True, help="Log progress (repeat for debug).")
@click.pass_context
def cli(ctx, output, verbose):
    """Crawl hidden-web book shops by filling their search forms."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"output": output}


def _lines(ctx) -> bool:
    return ctx.find_root().obj["output"] == "lines"


def _emit_json(obj):
    click.echo(json.dumps(obj, ensure_ascii=False))


def _read_lines(path) -> List[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [l.strip() for l in text.splitlines() if l.strip() and not l.lstrip().startswith("#")]


def _lexicon(path) -> LabelLexicon:
    if not path:
        return default_lexicon()
    try:
        return LabelLexicon.from_file(path)
    except (OSError, LexiconError) as exc:
        raise click.ClickException(f"cannot load lexicon {path}: {exc}")


# -- bootstrap ----------------------------------------------------------------

@cli.command()
@click.argument("pages", nargs=-1, required=True)
@click.option("--task-db", type=click.Path(dir_okay=False), required=True,
              help="Where to write the task database.")
@click.option("--lexicon", type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=click.FloatRange(0, 1), default=DEFAULT_THRESHOLD,
              show_default=True)
@click.option("--domain", default="books", show_default=True)
@click.pass_context
def bootstrap(ctx, pages, task_db, lexicon, threshold, domain):
    """Build a task database from pages listing domain records.

    PAGES are URLs or local HTML files.
    """
    lex = _lexicon(lexicon)
    fetcher = Fetcher(FetchPolicy(respect_robots=False))
    fetched = []
    for ref in pages:
        path = Path(ref)
        if path.is_file():
            fetched.append(WebPage.from_bytes(path.resolve().as_uri(), path.read_bytes()))
            continue
        try:
            fetched.append(fetcher.fetch_page(ref))
        except FetchError as exc:
            click.echo(f"warning: {ref}: {exc}", err=True)
    notes: List[str] = []
    try:
        db = build_task_db(fetched, lex, domain, threshold, notes)
    except EmptyBootstrap as exc:
        for n in exc.diagnostics:
            click.echo(f"note: {n}", err=True)
        raise click.ClickException(str(exc))
    db.save(task_db)
    for n in notes:
        click.echo(f"note: {n}", err=True)
    if _lines(ctx):
        _emit_json({"domain": db.domain_name, "labels": db.labels, "rows": len(db.rows),
                    "values": len(db), "path": task_db})
    else:
        click.echo(f"wrote {len(db.rows)} rows ({len(db)} distinct values) to {task_db}")
        for label in db.labels:
            click.echo(f"  {label}: {len(db.concept(label).values)} values")


# -- crawl and stats ----------------------------------------------------------

def _print_report(ctx, report: CrawlReport):
    if _lines(ctx):
        _emit_json(report.to_dict(pages=False))
        return
    ratio = report.valid_page_ratio
    rows = [
        ("matcher", report.matcher),
        ("websites visited", report.websites_visited),
        ("forms found", report.forms_found),
        ("forms filled", report.forms_filled),
        ("total pages", report.total_pages),
        ("valid pages", report.valid_pages),
        ("valid page ratio", "n/a" if ratio is None else f"{ratio:.6f}"),
        ("records inserted", report.records_inserted),
        ("duplicates dropped", report.duplicates_dropped),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        click.echo(f"{k:<{width}}  {v}")
    for seed, errs in report.errors.items():
        for e in errs:
            click.echo(f"error  {seed}  {e}")


@cli.command("crawl")
@click.option("--seeds", type=click.Path(exists=True, dir_okay=False),
              help="File of seed URLs, one per line.")
@click.option("--seed", "seed_urls", multiple=True, help="Seed URL (repeatable).")
@click.option("--task-db", type=click.Path(dir_okay=False), required=True)
@click.option("--repo", type=click.Path(dir_okay=False), required=True)
@click.option("--lexicon", type=click.Path(dir_okay=False))
@click.option("--threshold", type=float, default=DEFAULT_THRESHOLD, show_default=True)
@click.option("--max-submissions", type=int, default=5, show_default=True,
              help="Submissions per form.")
@click.option("--matcher", type=click.Choice(MATCHERS), default="semantic", show_default=True)
@click.option("--bootstrap-page", multiple=True,
              help="Page listing records, used when the task DB is missing.")
@click.option("--delay", type=float, default=1.0, show_default=True,
              help="Seconds between requests to one host.")
@click.option("--retries", type=int, default=2, show_default=True)
@click.option("--timeout", type=float, default=None, help="Per-request timeout in seconds.")
@click.option("--ignore-robots", is_flag=True, help="Do not consult robots.txt.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Sites crawled in parallel.")
@click.option("--report", type=click.Path(dir_okay=False), help="Also save the report here.")
@click.pass_context
def crawl_cmd(ctx, seeds, seed_urls, task_db, repo, lexicon, threshold, max_submissions, matcher,
              bootstrap_page, delay, retries, timeout, ignore_robots, workers, report):
    """Fill and submit the search forms of every seed site."""
    urls = list(seed_urls)
    if seeds:
        urls += _read_lines(seeds)
    config = CrawlConfig(
        seeds=urls, task_db_path=task_db, repo_path=repo, lexicon_path=lexicon,
        threshold=threshold, max_submissions_per_form=max_submissions, matcher=matcher,
        bootstrap_urls=list(bootstrap_page), workers=workers, per_host_delay=delay,
        max_retries=retries, timeout=timeout, respect_robots=not ignore_robots)
    try:
        result = crawl(config)
    except ConfigError as exc:
        raise click.ClickException(f"configuration error: {exc}")
    except StorageError as exc:
        raise click.ClickException(f"storage error: {exc}")
    if report:
        result.save(report)
    _print_report(ctx, result)


@cli.command()
@click.option("--report", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Report file written by crawl --report.")
@click.pass_context
def stats(ctx, report):
    """Print a saved crawl report, including the valid page ratio."""
    try:
        loaded = CrawlReport.load(report)
    except (ValueError, KeyError, TypeError) as exc:
        raise click.ClickException(f"cannot read report {report}: {exc}")
    _print_report(ctx, loaded)


# -- repository ---------------------------------------------------------------

def _open_repo(path) -> Repository:
    if not Path(path).is_file():
        raise click.ClickException(f"repository not found: {path}")
    try:
        return Repository(path)
    except StorageError as exc:
        raise click.ClickException(str(exc))


def _print_records(ctx, records: List[DataRecord]):
    if _lines(ctx):
        for r in records:
            _emit_json(r.as_dict())
        return
    cols = ["isbn", "title", "author", "publisher", "price"]
    table = [[(getattr(r, c) or "") for c in cols] for r in records]
    widths = [min(40, max([len(c)] + [len(row[i]) for row in table])) for i, c in enumerate(cols)]

    def fmt(cells):
        out = []
        for cell, w in zip(cells, widths):
            cell = cell if len(cell) <= w else cell[:w - 1] + "…"
            out.append(f"{cell:<{w}}")
        return "  ".join(out).rstrip()

    click.echo(fmt([c.upper() for c in cols]))
    for row in table:
        click.echo(fmt(row))
    click.echo(f"({len(records)} records)")


@cli.command()
@click.option("--repo", type=click.Path(dir_okay=False), required=True)
@click.option("--isbn", default="")
@click.option("--title", default="")
@click.option("--author", default="")
@click.option("--publisher", default="")
@click.option("--keywords", default="")
@click.pass_context
def query(ctx, repo, **criteria):
    """Records containing every given text, ignoring case."""
    repository = _open_repo(repo)
    try:
        found = repository.query(criteria)
    except EmptyCriteria as exc:
        raise click.UsageError(str(exc), ctx)
    _print_records(ctx, found)


@cli.command()
@click.option("--repo", type=click.Path(dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["tsv", "jsonl"]), default="tsv",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default stdout).")
def export(repo, fmt, out):
    """Dump every repository record with a header."""
    repository = _open_repo(repo)
    if out:
        try:
            repository.export(out, fmt)
        except StorageError as exc:
            raise click.ClickException(str(exc))
        click.echo(f"wrote {len(repository)} records to {out}", err=True)
    else:
        click.echo(repository.dumps(fmt), nl=False)


# -- fixtures -----------------------------------------------------------------

@cli.group()
def fixtures():
    """Synthetic book shops for testing the crawler."""


def _manifest(path):
    from .fixtures import ManifestError, default_manifest_path, load_manifest
    try:
        return load_manifest(path or default_manifest_path())
    except ManifestError as exc:
        for p in exc.problems:
            click.echo(f"{path or 'default manifest'}: {p}", err=True)
        raise click.ClickException(f"invalid manifest ({len(exc.problems)} problems)")
    except OSError as exc:
        raise click.ClickException(f"cannot read manifest {path}: {exc}")


@fixtures.command("validate")
@click.option("--manifest", type=click.Path(dir_okay=False),
              help="Manifest file (default: the bundled six-site manifest).")
@click.pass_context
def fixtures_validate(ctx, manifest):
    """Check a manifest and its datasets."""
    m = _manifest(manifest)
    if _lines(ctx):
        for s in m.sites:
            _emit_json({"site": s.name, "records": len(s.dataset), "fields": len(s.form.fields)})
        return
    for s in m.sites:
        click.echo(f"{s.name:<12} {len(s.dataset):>4} records  {len(s.form.fields)} fields")
    click.echo("manifest OK")


@fixtures.command("serve")
@click.option("--manifest", type=click.Path(dir_okay=False))
@click.option("--port", type=int, default=0, show_default=True,
              help="First port; sites use consecutive ports. 0 picks free ports.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--duration", type=float, default=None,
              help="Stop after this many seconds (default: until interrupted).")
@click.option("--seeds-out", type=click.Path(dir_okay=False),
              help="Write the site URLs here, one per line, for crawl --seeds.")
@click.pass_context
def fixtures_serve(ctx, manifest, port, host, duration, seeds_out):
    """Serve every manifest site on loopback."""
    from .fixtures import FixtureServer
    m = _manifest(manifest)
    server = FixtureServer(m, host=host, base_port=port or None)
    try:
        server.start()
    except OSError as exc:
        raise click.ClickException(f"cannot bind: {exc}")
    try:
        if seeds_out:
            Path(seeds_out).write_text("".join(u + "\n" for u in server.seed_urls),
                                       encoding="utf-8")
        if _lines(ctx):
            for name, url in server.urls.items():
                _emit_json({"site": name, "url": url})
            for url in server.seed_page_urls:
                _emit_json({"seed_page": url})
        else:
            for name, url in server.urls.items():
                click.echo(f"{name:<12} {url}")
            for url in server.seed_page_urls:
                click.echo(f"{'seed page':<12} {url}")
        sys.stdout.flush()
        deadline = None if duration is None else time.monotonic() + duration
        while deadline is None or time.monotonic() < deadline:
            time.sleep(0.1)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="hiddenweb", standalone_mode=False)
    except click.exceptions.NoArgsIsHelpError as exc:
        click.echo(exc.ctx.get_help() if exc.ctx else str(exc), err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.exceptions.Exit as exc:
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

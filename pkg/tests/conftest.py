import copy
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hiddenweb.fixtures import FixtureServer, default_manifest  # noqa: E402
from hiddenweb.fixtures.server import render_seed  # noqa: E402
from hiddenweb.forms import WebPage  # noqa: E402
from hiddenweb.matcher import default_lexicon  # noqa: E402


@pytest.fixture(scope="session")
def manifest():
    return default_manifest()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def seed_page(manifest):
    seed = manifest.seed_pages[0]
    return WebPage("http://seed.test/seed/books.html", render_seed(seed))


@pytest.fixture(scope="session")
def seed_rows(manifest):
    return manifest.seed_pages[0].dataset


@pytest.fixture
def server(manifest):
    """Every default site, freshly started so failure counters and logs are new."""
    srv = FixtureServer(copy.deepcopy(manifest)).start()
    yield srv
    srv.stop()


def html_page(body, url="http://shop.test/", status=200):
    return WebPage(url, f"<html><body>{body}</body></html>", status=status)


def crawl_config(tmp_path, server, sites=None, **kw):
    """Config for a fast crawl of ``sites`` (default all) served by ``server``."""
    from hiddenweb.pipeline import CrawlConfig
    names = sites or [s.name for s in server.manifest.sites]
    tmp_path.mkdir(parents=True, exist_ok=True)
    base = dict(seeds=[server.urls[n] for n in names],
                task_db_path=str(tmp_path / "taskdb.tsv"), repo_path=str(tmp_path / "repo.tsv"),
                bootstrap_urls=list(server.seed_page_urls), per_host_delay=0.02, workers=6,
                timeout=5)
    base.update(kw)
    return CrawlConfig(**base)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

import json

import pytest
from click.testing import CliRunner

from hiddenweb.cli import cli, main
from hiddenweb.extractor import DataRecord, detect_template, extract_records
from hiddenweb.fixtures.server import render_seed
from hiddenweb.pipeline import CrawlReport
from hiddenweb.repository import Repository
from hiddenweb.taskdb import TaskDatabase


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def seed_repo(tmp_path, seed_page, lexicon):
    path = tmp_path / "repo.tsv"
    recs = extract_records(seed_page, detect_template(seed_page, lexicon=lexicon), lexicon)
    Repository(path).upsert(recs)
    return path


def test_no_arguments_prints_help_and_fails(capsys):
    assert main([]) != 0
    assert "Usage" in capsys.readouterr().err


def test_unknown_command_is_usage_error(runner):
    result = runner.invoke(cli, ["frobnicate"])
    assert result.exit_code == 2


def test_query_title_jungle(runner, seed_repo):
    result = runner.invoke(cli, ["query", "--repo", str(seed_repo), "--title", "jungle"])
    assert result.exit_code == 0, result.output
    for title in ("Lipstick Jungle", "Second Jungle", "The jungle boo", "The Jungle Dur"):
        assert title in result.output
    assert "Cybersecurity" not in result.output
    assert "(4 records)" in result.output


def test_query_lines_parse_back_to_records(runner, seed_repo):
    result = runner.invoke(cli, ["--output", "lines", "query", "--repo", str(seed_repo),
                                 "--title", "jungle", "--author", "dix"])
    recs = [DataRecord.from_dict(json.loads(l)) for l in result.output.splitlines()]
    assert [(r.title, r.author) for r in recs] == [("The jungle boo", "Franklin W Dix")]


def test_query_without_criteria_is_usage_error(runner, seed_repo):
    result = runner.invoke(cli, ["query", "--repo", str(seed_repo)])
    assert result.exit_code == 2
    assert "criterion" in result.output


def test_flag_beats_env_beats_config_file(runner, seed_repo, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"query": {"title": "love"}}))
    base = ["--config", str(cfg), "--output", "lines", "query", "--repo", str(seed_repo)]

    def titles(args, env=None):
        out = runner.invoke(cli, base + args, env=env or {}).output
        return {json.loads(l)["title"] for l in out.splitlines()}

    assert titles([]) == {"The Love Affair"}
    assert titles([], {"HIDDENWEB_QUERY_TITLE": "cyber"}) == {"Cybersecurity"}
    assert titles(["--title", "windows"], {"HIDDENWEB_QUERY_TITLE": "cyber"}) == {"Windows 95 (T"}


def test_export_jsonl_round_trip(runner, seed_repo, tmp_path):
    out = tmp_path / "dump.jsonl"
    result = runner.invoke(cli, ["export", "--repo", str(seed_repo), "--format", "jsonl",
                                 "--out", str(out)])
    assert result.exit_code == 0
    assert Repository.import_file(out) == Repository(seed_repo)
    stdout = runner.invoke(cli, ["export", "--repo", str(seed_repo)]).output
    assert len(stdout.splitlines()) == 14


def test_bootstrap_from_local_file(runner, tmp_path, manifest):
    page = tmp_path / "seed.html"
    page.write_text(render_seed(manifest.seed_pages[0]))
    db_path = tmp_path / "db.tsv"
    result = runner.invoke(cli, ["bootstrap", str(page), "--task-db", str(db_path)])
    assert result.exit_code == 0, result.output
    db = TaskDatabase.load(db_path)
    assert len(db.rows) == 13
    assert "Franklin W Dix" in db.concept("Author").values


def test_bootstrap_with_nothing_usable_fails(runner, tmp_path):
    page = tmp_path / "empty.html"
    page.write_text("<p>nothing here</p>")
    result = runner.invoke(cli, ["bootstrap", str(page), "--task-db", str(tmp_path / "db")])
    assert result.exit_code == 1
    assert "no repeated record region" in result.output


def test_crawl_then_stats(runner, server, tmp_path):
    report = tmp_path / "report.json"
    args = ["--output", "lines", "crawl", "--task-db", str(tmp_path / "db.tsv"),
            "--repo", str(tmp_path / "repo.tsv"), "--delay", "0.02", "--workers", "6",
            "--report", str(report)]
    for url in server.seed_urls:
        args += ["--seed", url]
    for url in server.seed_page_urls:
        args += ["--bootstrap-page", url]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    printed = CrawlReport.from_dict(json.loads(result.output))
    assert printed.websites_visited == 6
    saved = CrawlReport.load(report)
    assert (printed.total_pages, printed.records_inserted) == (saved.total_pages,
                                                              saved.records_inserted)
    human = runner.invoke(cli, ["stats", "--report", str(report)])
    assert human.exit_code == 0
    assert "valid page ratio" in human.output
    assert "websites visited    6" in human.output


def test_crawl_seeds_file(runner, server, tmp_path):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("# fixture shops\n" + server.urls["single"] + "\n")
    result = runner.invoke(cli, ["crawl", "--seeds", str(seeds), "--task-db",
                                 str(tmp_path / "db.tsv"), "--repo", str(tmp_path / "r.tsv"),
                                 "--delay", "0.02", "--bootstrap-page",
                                 server.seed_page_urls[0]])
    assert result.exit_code == 0, result.output
    assert "websites visited    1" in result.output


def test_crawl_config_error_exits_nonzero(runner, tmp_path):
    result = runner.invoke(cli, ["crawl", "--seed", "http://x.test/", "--task-db",
                                 str(tmp_path / "missing.tsv"), "--repo", str(tmp_path / "r.tsv")])
    assert result.exit_code == 1
    assert "configuration error" in result.output
    assert main(["crawl", "--seed", "http://x.test/", "--task-db", str(tmp_path / "missing.tsv"),
                 "--repo", str(tmp_path / "r.tsv"), "--threshold", "2"]) == 1


def test_fixtures_validate(runner, tmp_path):
    ok = runner.invoke(cli, ["fixtures", "validate"])
    assert ok.exit_code == 0 and "manifest OK" in ok.output
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"sites": [{"name": "x", "form": {"fields": []}}]}))
    result = runner.invoke(cli, ["fixtures", "validate", "--manifest", str(bad)])
    assert result.exit_code == 1
    assert "sites[0].dataset: required" in result.output


def test_fixtures_serve_for_a_moment(runner, tmp_path):
    seeds = tmp_path / "seeds.txt"
    result = runner.invoke(cli, ["--output", "lines", "fixtures", "serve", "--duration", "0.2",
                                 "--seeds-out", str(seeds)])
    assert result.exit_code == 0, result.output
    sites = [json.loads(l) for l in result.output.splitlines()]
    assert len([s for s in sites if "site" in s]) == 6
    assert len(seeds.read_text().split()) == 6

"""End-to-end crawl over seed sites and the valid-page metric."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .extractor import (DataRecord, NoTemplate, RecordTemplate, detect_site_template,
                        extract_records, field_for_concept, filter_invalid, is_error_page)
from .fetcher import FetchError, Fetcher, FetchPolicy, VisitedSet
from .filler import DEFAULT_MAX_SUBMISSIONS, build_submission, plan_fills
from .forms import WebPage, detect_forms
from .matcher import (DEFAULT_THRESHOLD, LabelLexicon, LexiconError, default_lexicon,
                      exact_label_match, match_form, score_label_match)
from .repository import MergeStats, Repository
from .taskdb import EmptyBootstrap, TaskDatabase, bootstrap

logger = logging.getLogger(__name__)

MATCHERS = ("semantic", "exact")


class ConfigError(ValueError):
    pass


class DivisionDomain(ZeroDivisionError):
    pass


def valid_page_ratio(valid: int, total: int) -> float:
    """Share of retrieved response pages that were valid."""
    if total == 0:
        raise DivisionDomain("valid page ratio is undefined for zero pages")
    if total < 0 or not 0 <= valid <= total:
        raise ValueError(f"need 0 <= valid <= total, got {valid}/{total}")
    return valid / total


@dataclass
class CrawlConfig:
    seeds: List[str]
    task_db_path: Optional[str] = None
    repo_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    threshold: float = DEFAULT_THRESHOLD
    max_submissions_per_form: int = DEFAULT_MAX_SUBMISSIONS
    matcher: str = "semantic"
    # pages listing domain records, used to build the task DB when it is missing
    bootstrap_urls: List[str] = field(default_factory=list)
    update_task_db: bool = True
    workers: int = 1
    per_host_delay: float = 1.0
    max_retries: int = 2
    timeout: Optional[float] = None
    max_redirects: int = 5
    user_agent: Optional[str] = None
    respect_robots: bool = True

    def validate(self):
        problems = []
        if not self.seeds:
            problems.append("at least one seed URL is required")
        if not 0.0 <= self.threshold <= 1.0:
            problems.append(f"threshold must be in [0, 1], got {self.threshold}")
        if self.max_submissions_per_form < 1:
            problems.append("max_submissions_per_form must be at least 1")
        if self.matcher not in MATCHERS:
            problems.append(f"matcher must be one of {MATCHERS}, got {self.matcher!r}")
        if self.workers < 1:
            problems.append("workers must be at least 1")
        if self.lexicon_path and not Path(self.lexicon_path).is_file():
            problems.append(f"lexicon file not found: {self.lexicon_path}")
        db_present = self.task_db_path and Path(self.task_db_path).is_file()
        if not db_present and not self.bootstrap_urls:
            problems.append("task DB file not found and no bootstrap pages given: "
                            f"{self.task_db_path}")
        if self.repo_path and not Path(self.repo_path).resolve().parent.is_dir():
            problems.append(f"repository directory does not exist: {self.repo_path}")
        try:
            self.policy()
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("; ".join(problems))

    def policy(self) -> FetchPolicy:
        kw = dict(per_host_delay=self.per_host_delay, max_retries=self.max_retries,
                  max_redirects=self.max_redirects, respect_robots=self.respect_robots)
        if self.timeout is not None:
            kw["timeout"] = self.timeout
        if self.user_agent:
            kw["user_agent"] = self.user_agent
        return FetchPolicy(**kw)


@dataclass
class PageOutcome:
    site: str
    method: str
    url: str
    params: List[Tuple[str, str]]
    status: int
    error_page: bool
    records: List[Dict[str, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.error_page and bool(self.records)


@dataclass
class SiteOutcome:
    seed: str
    forms_found: int = 0
    forms_filled: int = 0
    total_pages: int = 0
    valid_pages: int = 0
    records_extracted: int = 0
    records_inserted: int = 0
    duplicates_dropped: int = 0
    values_added: int = 0
    errors: List[str] = field(default_factory=list)


@dataclass
class CrawlReport:
    websites_visited: int = 0
    forms_found: int = 0
    forms_filled: int = 0
    total_pages: int = 0
    valid_pages: int = 0
    records_inserted: int = 0
    duplicates_dropped: int = 0
    errors: Dict[str, List[str]] = field(default_factory=dict)
    matcher: str = "semantic"
    sites: List[SiteOutcome] = field(default_factory=list)
    pages: List[PageOutcome] = field(default_factory=list)

    @property
    def valid_page_ratio(self) -> Optional[float]:
        return valid_page_ratio(self.valid_pages, self.total_pages) if self.total_pages else None

    def site(self, seed: str) -> SiteOutcome:
        for s in self.sites:
            if s.seed == seed:
                return s
        raise KeyError(seed)

    def to_dict(self, pages: bool = True) -> dict:
        d = asdict(self)
        d["valid_page_ratio"] = self.valid_page_ratio
        if not pages:
            d.pop("pages")
        return d

    def to_json(self, pages: bool = True, **kw) -> str:
        return json.dumps(self.to_dict(pages), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CrawlReport":
        known = {f.name for f in dc_fields(cls)}
        kw = {k: v for k, v in d.items() if k in known}
        kw["sites"] = [SiteOutcome(**s) for s in d.get("sites", [])]
        kw["pages"] = [PageOutcome(**{**p, "params": [tuple(x) for x in p["params"]]})
                       for p in d.get("pages", [])]
        return cls(**kw)

    def save(self, path):
        Path(path).write_text(self.to_json(indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CrawlReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _load_lexicon(config: CrawlConfig) -> LabelLexicon:
    if not config.lexicon_path:
        return default_lexicon()
    try:
        return LabelLexicon.from_file(config.lexicon_path)
    except (OSError, LexiconError) as exc:
        raise ConfigError(f"cannot load lexicon {config.lexicon_path}: {exc}") from exc


def _load_task_db(config: CrawlConfig, lexicon: LabelLexicon, fetcher: Fetcher) -> TaskDatabase:
    path = Path(config.task_db_path) if config.task_db_path else None
    if path is not None and path.is_file():
        db = TaskDatabase.load(path)
        if len(db):
            return db
        if not config.bootstrap_urls:
            raise ConfigError(f"task DB {path} is empty and no bootstrap pages given")
    pages = []
    for url in config.bootstrap_urls:
        try:
            pages.append(fetcher.fetch_page(url))
        except FetchError as exc:
            logger.warning("bootstrap page %s: %s", url, exc)
    try:
        db = bootstrap(pages, lexicon, threshold=config.threshold)
    except EmptyBootstrap as exc:
        raise ConfigError(f"{exc}: {'; '.join(exc.diagnostics)}") from exc
    if path is not None:
        db.save(path)
    return db


class _Crawl:
    def __init__(self, config: CrawlConfig, lexicon: LabelLexicon, db: TaskDatabase,
                 repo: Repository, fetcher: Fetcher):
        self.config = config
        self.lexicon = lexicon
        self.db = db
        self.repo = repo
        self.fetcher = fetcher
        self.scorer = score_label_match if config.matcher == "semantic" else exact_label_match

    def _site_template(self, pages: Sequence[WebPage],
                       landing: WebPage) -> Optional[RecordTemplate]:
        # induced over all of the site's answers, with the landing page as a
        # reference free of records, so pages with one or two hits still extract
        pages = [p for p in pages if p.status < 400]
        try:
            return detect_site_template(pages, self.lexicon.canonical_labels, self.lexicon,
                                        self.config.threshold, blank=[landing])
        except NoTemplate:
            return None

    def run_site(self, seed: str) -> Tuple[SiteOutcome, List[PageOutcome], bool, list]:
        out = SiteOutcome(seed)
        # each site fills from the database as loaded, with its own rotation
        # cursors, so what one site submits never depends on thread timing
        db = self.db.snapshot()
        try:
            landing = self.fetcher.fetch_page(seed)
        except FetchError as exc:
            out.errors.append(f"fetch {seed}: {exc}")
            return out, [], False, []
        if landing.status >= 400:
            out.errors.append(f"fetch {seed}: HTTP {landing.status}")
            return out, [], True, []

        forms = detect_forms(landing)
        out.forms_found = len(forms)
        if not forms:
            out.errors.append("no search form found")
        answers: List[Tuple[object, WebPage]] = []
        for form in forms:
            mapping = match_form(form, db.labels, self.lexicon, self.config.threshold,
                                 self.scorer)
            if not len(mapping):
                out.errors.append(f"form {form.action_url}: no field matched a concept")
                continue
            plans = plan_fills(form, mapping, db, self.config.max_submissions_per_form,
                               self.lexicon)
            for filled in plans:
                req = build_submission(filled)
                if self.fetcher.visited.has_fingerprint(req.fingerprint):
                    continue
                out.forms_filled += 1
                try:
                    answers.append((req, self.fetcher.submit_form(req)))
                except FetchError as exc:
                    out.errors.append(f"submit {req.url}: {exc}")

        template = self._site_template([p for _, p in answers], landing)
        if answers and template is None:
            out.errors.append("no record region found on any response page")
        pages, site_records = [], []
        for req, page in answers:
            error = page.status >= 400 or template is None or is_error_page(page, template=template)
            records: List[DataRecord] = []
            if not error:
                records = filter_invalid(extract_records(page, template, self.lexicon))
            site_records.extend(records)
            pages.append(PageOutcome(seed, req.method, req.url, list(req.parameters), page.status,
                                     error, [r.as_dict() for r in records]))
        out.total_pages = len(pages)
        out.valid_pages = sum(p.valid for p in pages)
        out.records_extracted = len(site_records)
        return out, pages, True, site_records

    def merge(self, out: SiteOutcome, site_records: Sequence[DataRecord]):
        stats = self.repo.upsert(site_records) if site_records else MergeStats()
        out.records_inserted, out.duplicates_dropped = stats.inserted, stats.duplicates_dropped
        if self.config.update_task_db:
            out.values_added = self._feed_back(site_records, out.seed)

    def _feed_back(self, records: Sequence[DataRecord], source: str) -> int:
        added = 0
        for label in self.db.labels:
            name = field_for_concept(label, self.lexicon)
            if name is None or name == "availability":
                continue
            values = [getattr(r, name) for r in records if getattr(r, name)]
            added += self.db.update(label, values, source=source)
        return added


def crawl(config: CrawlConfig, fetcher: Optional[Fetcher] = None) -> CrawlReport:
    """Visit every seed site, fill its forms, extract and merge the answers.

    Per-site failures are recorded in the report; only configuration problems
    raise.
    """
    config.validate()
    lexicon = _load_lexicon(config)
    fetcher = fetcher or Fetcher(config.policy(), VisitedSet())
    db = _load_task_db(config, lexicon, fetcher)
    repo = Repository(config.repo_path)
    job = _Crawl(config, lexicon, db, repo, fetcher)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(job.run_site, config.seeds))
    else:
        results = [job.run_site(seed) for seed in config.seeds]

    # merged in seed order once every site is done, for reproducible counts
    report = CrawlReport(matcher=config.matcher)
    for site, pages, reached, site_records in results:
        job.merge(site, site_records)
        report.sites.append(site)
        report.pages.extend(pages)
        report.websites_visited += reached
        report.forms_found += site.forms_found
        report.forms_filled += site.forms_filled
        report.total_pages += site.total_pages
        report.valid_pages += site.valid_pages
        report.records_inserted += site.records_inserted
        report.duplicates_dropped += site.duplicates_dropped
        if site.errors:
            report.errors[site.seed] = list(site.errors)

    if config.task_db_path and config.update_task_db:
        db.save(config.task_db_path)
    return report

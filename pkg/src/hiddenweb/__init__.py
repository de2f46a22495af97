"""Domain-specific hidden web crawling: find search forms, fill them from a
task database, extract the answers and merge them into one repository."""

from .extractor import (DataRecord, NoTemplate, RecordTemplate, detect_site_template,
                        detect_template, extract_records, filter_invalid, is_error_page)
from .fetcher import (FetchPolicy, FetchTimeout, Fetcher, NetworkError, RobotsDisallowed,
                      TooManyRedirects, VisitedSet)
from .filler import (FilledForm, NoFillableMapping, SubmissionRequest, build_submission,
                     plan_fills)
from .forms import (Control, FieldDomain, FormField, FormKind, SearchForm, WebPage,
                    detect_forms, extract_field_domain, extract_field_label)
from .matcher import (FieldMapping, LabelLexicon, default_lexicon, exact_label_match,
                      match_form, score_label_match)
from .pipeline import (ConfigError, CrawlConfig, CrawlReport, DivisionDomain, crawl,
                       valid_page_ratio)
from .repository import EmptyCriteria, MergeStats, Repository, StorageError
from .taskdb import EmptyBootstrap, TaskDatabase, UnknownConcept, bootstrap

__version__ = "0.1.0"

__all__ = [
    "Control", "ConfigError", "CrawlConfig", "CrawlReport", "DataRecord", "DivisionDomain",
    "EmptyBootstrap", "EmptyCriteria", "FetchPolicy", "FetchTimeout", "Fetcher", "FieldDomain",
    "FieldMapping", "FilledForm", "FormField", "FormKind", "LabelLexicon", "MergeStats",
    "NetworkError", "NoFillableMapping", "NoTemplate", "RecordTemplate", "Repository",
    "RobotsDisallowed", "SearchForm", "StorageError", "SubmissionRequest", "TaskDatabase",
    "TooManyRedirects", "UnknownConcept", "VisitedSet", "WebPage", "bootstrap",
    "build_submission", "crawl", "default_lexicon", "detect_forms", "detect_site_template",
    "detect_template", "exact_label_match", "extract_field_domain", "extract_field_label",
    "extract_records", "filter_invalid", "is_error_page", "match_form", "plan_fills",
    "score_label_match", "valid_page_ratio",
]

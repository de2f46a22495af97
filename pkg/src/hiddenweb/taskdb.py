"""The task-specific database: concepts and the values used to fill forms.

Stored as a tab-separated Label-Value Table. The first line is a comment
naming the domain, the second is the header (concept labels followed by the
provenance columns ``_source``, ``_fetched_at`` and ``_origin``), and each
following line is one row of values. Cells containing tabs, quotes or line
breaks are quoted with ``"`` and inner quotes doubled, as in RFC 4180.
"""

from __future__ import annotations

import copy
import csv
import datetime as _dt
import io
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from .extractor import NoTemplate, detect_template, extract_rows
from .forms import WebPage
from .matcher import LabelLexicon

logger = logging.getLogger(__name__)

META_COLUMNS = ("_source", "_fetched_at", "_origin")
BOOTSTRAP = "bootstrap"
UPDATE = "update"


class UnknownConcept(KeyError):
    pass


class EmptyBootstrap(ValueError):
    def __init__(self, message: str, diagnostics: Sequence[str] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


def normalize_value(value: str) -> str:
    return " ".join(value.split()).casefold()


def clean_cell(value: str) -> str:
    """Trim a value and make it storable: no NUL bytes, line breaks as ``\\n``."""
    return value.replace("\x00", "").replace("\r\n", "\n").replace("\r", "\n").strip()


def _stamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class Row:
    cells: Dict[str, str]
    source: str = ""
    fetched_at: str = ""
    origin: str = BOOTSTRAP


@dataclass
class Concept:
    canonical_label: str
    values: List[str] = field(default_factory=list)
    last_used_index: int = 0
    # value -> indices of rows that hold it
    rows: Dict[str, List[int]] = field(default_factory=dict)
    _keys: Dict[str, str] = field(default_factory=dict, repr=False)

    def has(self, value: str) -> bool:
        return normalize_value(value) in self._keys

    def _add(self, value: str, row_index: int) -> bool:
        key = normalize_value(value)
        existing = self._keys.get(key)
        if existing is not None:
            self.rows[existing].append(row_index)
            return False
        self._keys[key] = value
        self.values.append(value)
        self.rows[value] = [row_index]
        return True


class TaskDatabase:
    def __init__(self, domain_name: str = "books", labels: Sequence[str] = ()):
        self.domain_name = domain_name
        self.concepts: Dict[str, Concept] = {}
        self.rows: List[Row] = []
        self.row_cursor = 0
        self._lock = threading.RLock()
        for label in labels:
            self._concept(label, create=True)

    def snapshot(self) -> "TaskDatabase":
        """Independent copy, rotation cursors included."""
        with self._lock:
            other = copy.copy(self)
            other._lock = threading.RLock()
            other.rows = list(self.rows)
            other.concepts = {k: copy.deepcopy(c) for k, c in self.concepts.items()}
        return other

    # -- structure ----------------------------------------------------------

    @property
    def labels(self) -> List[str]:
        return list(self.concepts)

    def __len__(self) -> int:
        return sum(len(c.values) for c in self.concepts.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TaskDatabase):
            return NotImplemented
        return (self.domain_name == other.domain_name and self.labels == other.labels
                and self.rows == other.rows)

    def _concept(self, label: str, create: bool = False) -> Concept:
        concept = self.concepts.get(label)
        if concept is None:
            folded = label.casefold()
            concept = next((c for k, c in self.concepts.items() if k.casefold() == folded), None)
        if concept is None:
            if not create:
                raise UnknownConcept(label)
            concept = self.concepts[label] = Concept(label)
        return concept

    def concept(self, label: str) -> Concept:
        return self._concept(label)

    def add_row(self, cells: Dict[str, str], source: str = "", fetched_at: str = "",
                origin: str = BOOTSTRAP) -> int:
        """Append a row; returns how many of its values were new to their concept."""
        with self._lock:
            cells = {self._concept(k, create=True).canonical_label: clean_cell(v)
                     for k, v in cells.items() if v and clean_cell(v)}
            index = len(self.rows)
            self.rows.append(Row(cells, clean_cell(source), clean_cell(fetched_at) or _stamp(),
                                 origin))
            return sum(self.concepts[k]._add(v, index) for k, v in cells.items())

    # -- lookups ------------------------------------------------------------

    def lookup_values(self, concept_label: str, k: int) -> List[str]:
        """Next ``k`` values of a concept in rotation, advancing its cursor."""
        with self._lock:
            concept = self._concept(concept_label)
            n = len(concept.values)
            if k <= 0 or n == 0:
                return []
            take = min(k, n)
            start = concept.last_used_index % n
            out = [concept.values[(start + i) % n] for i in range(take)]
            concept.last_used_index = (start + take) % n
            return out

    def next_rows(self, k: int, origin: str = BOOTSTRAP) -> List[Row]:
        """Next ``k`` rows of the given origin in rotation."""
        with self._lock:
            pool = [r for r in self.rows if r.origin == origin]
            if k <= 0 or not pool:
                return []
            take = min(k, len(pool))
            start = self.row_cursor % len(pool)
            self.row_cursor = (start + take) % len(pool)
            return [pool[(start + i) % len(pool)] for i in range(take)]

    def update(self, concept_label: str, new_values: Iterable[str], source: str = "",
               fetched_at: str = "") -> int:
        """Insert unseen values (one row each); an unknown label creates the concept."""
        inserted = 0
        with self._lock:
            concept = self._concept(concept_label, create=True)
            for value in new_values:
                value = clean_cell(value or "")
                if not value or concept.has(value):
                    continue
                inserted += self.add_row({concept.canonical_label: value}, source,
                                         fetched_at, UPDATE)
        return inserted

    # -- persistence --------------------------------------------------------

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"# domain: {self.domain_name}\n")
        writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
        writer.writerow([*self.labels, *META_COLUMNS])
        for row in self.rows:
            writer.writerow([*(row.cells.get(l, "") for l in self.labels),
                             row.source, row.fetched_at, row.origin])
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "TaskDatabase":
        lines = text.split("\n", 1)
        domain = "books"
        if lines and lines[0].startswith("#"):
            head = lines[0].lstrip("#").strip()
            if head.startswith("domain:"):
                domain = head.split(":", 1)[1].strip()
            text = lines[1] if len(lines) > 1 else ""
        reader = csv.reader(io.StringIO(text), delimiter="\t")
        header = next(reader, None)
        if header is None:
            return cls(domain)
        labels = [h for h in header if h not in META_COLUMNS]
        db = cls(domain, labels)
        for raw in reader:
            if not raw:
                continue
            record = dict(zip(header, raw))
            cells = {l: record.get(l, "") for l in labels}
            db.add_row(cells, record.get("_source", ""), record.get("_fetched_at", ""),
                       record.get("_origin", BOOTSTRAP) or BOOTSTRAP)
        return db

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TaskDatabase":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def lookup_values(db: TaskDatabase, concept_label: str, k: int) -> List[str]:
    return db.lookup_values(concept_label, k)


def update(db: TaskDatabase, concept_label: str, new_values: Iterable[str], **kw) -> int:
    return db.update(concept_label, new_values, **kw)


def bootstrap(seed_pages: Sequence[WebPage], lexicon: LabelLexicon, domain_name: str = "books",
              threshold: float = 0.6, diagnostics: Optional[List[str]] = None) -> TaskDatabase:
    """Build a database from already-fetched result pages listing domain records.

    Column labels on each seed page are mapped to lexicon concepts; columns
    that map to nothing are reported in ``diagnostics`` and skipped.
    """
    diagnostics = diagnostics if diagnostics is not None else []

    def note(msg):
        logger.info(msg)
        diagnostics.append(msg)

    db = TaskDatabase(domain_name)
    for page in seed_pages:
        if page.status >= 400:
            note(f"{page.url}: HTTP {page.status}, skipped")
            continue
        try:
            template = detect_template(page, lexicon.canonical_labels, lexicon, threshold)
        except NoTemplate:
            note(f"{page.url}: no repeated record region, skipped")
            continue
        for subpath, label in template.unassigned:
            note(f"{page.url}: label {label or subpath!r} matches no concept, skipped")
        for cells in extract_rows(page, template):
            cells = {k: v for k, v in cells.items() if not k.startswith("@")}
            if not cells:
                note(f"{page.url}: row with no mappable value skipped")
                continue
            db.add_row(cells, source=page.url, origin=BOOTSTRAP)
    if len(db) == 0:
        raise EmptyBootstrap("no values could be extracted from the seed pages", diagnostics)
    return db

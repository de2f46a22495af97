"""The integrated store of extracted records, deduplicated on merge.

On disk the repository is a tab-separated file with the same quoting rules as
the task database: one header line naming the record fields, then one line
per record in insertion order. New records are appended; enriching an
existing record rewrites the file (compaction) on the same call.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence

from .extractor import RECORD_FIELDS, DataRecord
from .taskdb import clean_cell

logger = logging.getLogger(__name__)

COLUMNS = (*RECORD_FIELDS, "source_url", "extracted_at")
FORMATS = ("tsv", "jsonl")


class StorageError(OSError):
    pass


class EmptyCriteria(ValueError):
    pass


@dataclass(frozen=True)
class MergeStats:
    inserted: int = 0
    duplicates_dropped: int = 0

    def __add__(self, other: "MergeStats") -> "MergeStats":
        return MergeStats(self.inserted + other.inserted,
                          self.duplicates_dropped + other.duplicates_dropped)


def _retry_once(op: Callable, what: str):
    try:
        return op()
    except OSError as exc:
        logger.warning("%s failed (%s), retrying once", what, exc)
        try:
            return op()
        except OSError as exc2:
            raise StorageError(f"{what} failed: {exc2}") from exc2


def _write_tsv(fh, records: Iterable[DataRecord], header: bool = True):
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    if header:
        writer.writerow(COLUMNS)
    for rec in records:
        d = rec.as_dict()
        writer.writerow([d.get(c, "") for c in COLUMNS])


def _read_tsv(fh) -> List[DataRecord]:
    reader = csv.DictReader(fh, delimiter="\t")
    if reader.fieldnames is None:
        return []
    missing = [c for c in ("title", "author") if c not in reader.fieldnames]
    if missing:
        raise StorageError(f"not a repository file: missing columns {missing}")
    return [DataRecord.from_dict(row) for row in reader]


def _read_jsonl(fh) -> List[DataRecord]:
    out = []
    for lineno, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StorageError(f"line {lineno}: {exc.msg}") from exc
        out.append(DataRecord.from_dict({k: v or "" for k, v in data.items()}))
    return out


def _enrich(old: DataRecord, new: DataRecord) -> DataRecord:
    changes = {f: getattr(new, f) for f in RECORD_FIELDS
               if not getattr(old, f) and getattr(new, f)}
    return replace(old, **changes) if changes else old


class Repository:
    """Records keyed by normalized (title, author).

    Without a path the repository lives in memory only.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._records: List[DataRecord] = []
        self._index: Dict[str, int] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, newline="", encoding="utf-8") as fh:
                loaded = _read_tsv(fh)
            for rec in loaded:
                self._merge_one(rec)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[DataRecord]:
        return iter(self.records())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Repository):
            return NotImplemented
        return self.records() == other.records()

    def records(self) -> List[DataRecord]:
        with self._lock:
            return list(self._records)

    def _merge_one(self, rec: DataRecord) -> Optional[bool]:
        """None if inserted, True if an existing record was enriched, False otherwise."""
        cleaned = {f: clean_cell(getattr(rec, f)) or None for f in RECORD_FIELDS
                   if getattr(rec, f) is not None}
        rec = replace(rec, extras={}, source_url=clean_cell(rec.source_url),
                      extracted_at=clean_cell(rec.extracted_at), **cleaned)
        key = rec.dedup_key
        pos = self._index.get(key)
        if pos is None:
            self._index[key] = len(self._records)
            self._records.append(rec)
            return None
        merged = _enrich(self._records[pos], rec)
        if merged is self._records[pos]:
            return False
        self._records[pos] = merged
        return True

    def upsert(self, records: Sequence[DataRecord]) -> MergeStats:
        with self._lock:
            snapshot = (list(self._records), dict(self._index))
            new, enriched = [], False
            for rec in records:
                outcome = self._merge_one(rec)
                if outcome is None:
                    new.append(self._records[-1])
                enriched = enriched or bool(outcome)
            try:
                if self.path is not None and (new or enriched):
                    if enriched:
                        _retry_once(self._compact, f"rewriting {self.path}")
                    else:
                        _retry_once(lambda: self._append(new), f"appending to {self.path}")
            except StorageError:
                self._records, self._index = snapshot
                raise
            return MergeStats(len(new), len(records) - len(new))

    def _append(self, records: List[DataRecord]):
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            _write_tsv(fh, records, header=fresh)

    def _compact(self):
        tmp = self.path.with_name(self.path.name + ".tmp")
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            _write_tsv(fh, self._records)
        os.replace(tmp, self.path)

    def compact(self):
        if self.path is None:
            return
        with self._lock:
            _retry_once(self._compact, f"rewriting {self.path}")

    def query(self, criteria: Optional[Dict[str, Optional[str]]] = None,
              **kw: Optional[str]) -> List[DataRecord]:
        """Records whose fields contain every given pattern, ignoring case.

        Empty or None patterns are ignored; at least one must be non-empty.
        """
        merged = {**(criteria or {}), **kw}
        unknown = set(merged) - set(RECORD_FIELDS)
        if unknown:
            raise ValueError(f"unknown query fields: {sorted(unknown)}")
        active = [(f, p.casefold()) for f, p in merged.items() if p]
        if not active:
            raise EmptyCriteria("at least one query criterion must be non-empty")
        return [r for r in self.records()
                if all(p in (getattr(r, f) or "").casefold() for f, p in active)]

    # -- export and import --------------------------------------------------

    def dumps(self, fmt: str = "tsv") -> str:
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        records = self.records()
        if fmt == "tsv":
            buf = io.StringIO()
            _write_tsv(buf, records)
            return buf.getvalue()
        return "".join(json.dumps(r.as_dict(), ensure_ascii=False) + "\n" for r in records)

    def export(self, path, fmt: str = "tsv") -> Path:
        path = Path(path)
        text = self.dumps(fmt)
        _retry_once(lambda: path.write_text(text, encoding="utf-8"), f"writing {path}")
        return path

    @classmethod
    def loads(cls, text: str, fmt: str = "tsv") -> "Repository":
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        fh = io.StringIO(text, newline="")
        records = _read_tsv(fh) if fmt == "tsv" else _read_jsonl(fh)
        repo = cls()
        repo.upsert(records)
        return repo

    @classmethod
    def import_file(cls, path, fmt: Optional[str] = None) -> "Repository":
        path = Path(path)
        fmt = fmt or ("jsonl" if path.suffix in (".jsonl", ".json") else "tsv")
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"reading {path} failed: {exc}") from exc
        return cls.loads(text, fmt)

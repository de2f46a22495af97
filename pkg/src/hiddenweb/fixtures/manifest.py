"""Fixture site manifests.

A manifest is a JSON document::

    {
      "seed_pages": [{"path": "/seed/books.html", "dataset": "seed_books.csv"}],
      "sites": [{
        "name": "single",            # unique
        "port": 0,                   # 0 picks a free port
        "mount": "/",                # path prefix of every route
        "landing_redirects": 0,      # 302 hops before the landing page
        "form": {
          "method": "GET",           # GET | POST
          "action": "search",        # relative to the mount
          "submit": "Search",        # submit button caption, "" for none
          "fields": [{
            "name": "q",
            "label": "Title",
            "label_style": "for",    # for | wrap | cell | text | placeholder | none
            "control": "text",       # text | select | radio | checkbox | hidden
            "column": "Title",       # dataset column filtered by this field
            "options": ["Any", "..."],   # select/radio/checkbox values
            "value": "..."           # hidden value or preset
          }]
        },
        "dataset": "single.csv",     # relative to the manifest's directory
        "results": {
          "style": "table",          # table | list
          "per_page": 10,
          "columns": [{"column": "Title", "label": "Title", "style": "header"}]
        },
        "behaviors": {
          "search_failures": 0,      # leading 503 responses on the search route
          "search_error": false,     # search route always answers "no results"
          "unavailable": ["978..."]  # ISBNs rendered as out of stock
        }
      }]
    }

Column ``style`` only matters for list results: ``inline`` renders
``<p><b>Label:</b> value</p>``, ``class`` renders
``<span class="label">value</span>``, ``heading`` renders an ``<h3>``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

DATASET_COLUMNS = ("ISBN", "Title", "Author", "Published By", "Keywords", "Price")
PLACEHOLDER_OPTIONS = ("", "any", "all", "--", "- any -", "-- any --")
_LABEL_STYLES = {"for", "wrap", "cell", "text", "placeholder", "none"}
_CONTROLS = {"text", "select", "radio", "checkbox", "hidden"}
_COLUMN_STYLES = {"header", "inline", "class", "heading"}


class ManifestError(ValueError):
    def __init__(self, problems: List[str], source: str = "<manifest>"):
        self.problems = problems
        super().__init__(f"{source}: " + "; ".join(problems))


def is_placeholder(value: str) -> bool:
    v = " ".join((value or "").split()).casefold()
    return v in PLACEHOLDER_OPTIONS or v.startswith("--")


@dataclass
class FieldSpec:
    name: str
    label: str = ""
    label_style: str = "for"
    control: str = "text"
    column: Optional[str] = None
    options: List[str] = field(default_factory=list)
    value: str = ""


@dataclass
class FormSpec:
    fields: List[FieldSpec]
    method: str = "GET"
    action: str = "search"
    submit: str = "Search"


@dataclass
class ColumnSpec:
    column: str
    label: str
    style: str = "header"


@dataclass
class SiteSpec:
    name: str
    form: FormSpec
    dataset: List[Dict[str, str]]
    columns: List[ColumnSpec]
    style: str = "table"
    per_page: int = 10
    port: int = 0
    mount: str = "/"
    landing_redirects: int = 0
    search_failures: int = 0
    search_error: bool = False
    unavailable: Tuple[str, ...] = ()

    def route(self, path: str) -> str:
        return self.mount.rstrip("/") + "/" + path.lstrip("/")


@dataclass
class SeedPageSpec:
    path: str
    dataset: List[Dict[str, str]]
    title: str = "Book list"


@dataclass
class SiteManifest:
    sites: List[SiteSpec]
    seed_pages: List[SeedPageSpec] = field(default_factory=list)
    source: str = "<manifest>"

    def site(self, name: str) -> SiteSpec:
        for s in self.sites:
            if s.name == name:
                return s
        raise KeyError(name)

    def subset(self, names) -> "SiteManifest":
        return SiteManifest([self.site(n) for n in names], self.seed_pages, self.source)


def load_dataset(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        bad = [c for c in header if c not in DATASET_COLUMNS]
        if bad:
            raise ManifestError([f"dataset columns {bad} not in {list(DATASET_COLUMNS)}"],
                                str(path))
        rows = []
        for lineno, row in enumerate(reader, 2):
            row = {k: (v or "") for k, v in row.items() if k in DATASET_COLUMNS}
            if not any(v.strip() for v in row.values()):
                raise ManifestError([f"line {lineno}: empty row"], str(path))
            rows.append(row)
        return rows


class _Checker:
    def __init__(self):
        self.problems: List[str] = []

    def get(self, obj, key, where, kind, default=None, required=False):
        if not isinstance(obj, dict):
            self.problems.append(f"{where}: expected an object")
            return default
        if key not in obj:
            if required:
                self.problems.append(f"{where}.{key}: required")
            return default
        value = obj[key]
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            self.problems.append(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
            return default
        return value


def parse_manifest(data: dict, base_dir: Path, source: str = "<manifest>") -> SiteManifest:
    chk = _Checker()
    datasets: Dict[str, List[Dict[str, str]]] = {}

    def dataset(name, where):
        if name is None:
            return []
        if name not in datasets:
            path = base_dir / name
            if not path.is_file():
                chk.problems.append(f"{where}: dataset file {name!r} not found")
                datasets[name] = []
            else:
                try:
                    datasets[name] = load_dataset(path)
                except ManifestError as exc:
                    chk.problems.extend(f"{where}: {p}" for p in exc.problems)
                    datasets[name] = []
        return datasets[name]

    seeds = []
    for i, raw in enumerate(chk.get(data, "seed_pages", "$", list, []) or []):
        where = f"seed_pages[{i}]"
        path = chk.get(raw, "path", where, str, required=True)
        rows = dataset(chk.get(raw, "dataset", where, str, required=True), where + ".dataset")
        if path:
            seeds.append(SeedPageSpec(path, rows, chk.get(raw, "title", where, str, "Book list")))

    sites, names, ports = [], set(), set()
    for i, raw in enumerate(chk.get(data, "sites", "$", list, required=True) or []):
        where = f"sites[{i}]"
        name = chk.get(raw, "name", where, str, required=True)
        if name in names:
            chk.problems.append(f"{where}.name: duplicate site name {name!r}")
        names.add(name)
        port = chk.get(raw, "port", where, int, 0)
        if port:
            if port in ports:
                chk.problems.append(f"{where}.port: port {port} used twice")
            ports.add(port)

        form_raw = chk.get(raw, "form", where, dict, {}, required=True)
        fields, field_names = [], set()
        for j, fr in enumerate(chk.get(form_raw, "fields", where + ".form", list, [],
                                       required=True)):
            fwhere = f"{where}.form.fields[{j}]"
            fname = chk.get(fr, "name", fwhere, str, required=True)
            if fname in field_names:
                chk.problems.append(f"{fwhere}.name: duplicate field name {fname!r}")
            field_names.add(fname)
            spec = FieldSpec(
                name=fname or "",
                label=chk.get(fr, "label", fwhere, str, ""),
                label_style=chk.get(fr, "label_style", fwhere, str, "for"),
                control=chk.get(fr, "control", fwhere, str, "text"),
                column=chk.get(fr, "column", fwhere, str, None),
                options=chk.get(fr, "options", fwhere, list, []),
                value=chk.get(fr, "value", fwhere, str, ""),
            )
            if spec.label_style not in _LABEL_STYLES:
                chk.problems.append(f"{fwhere}.label_style: {spec.label_style!r} not in "
                                    f"{sorted(_LABEL_STYLES)}")
            if spec.control not in _CONTROLS:
                chk.problems.append(f"{fwhere}.control: {spec.control!r} not in {sorted(_CONTROLS)}")
            if spec.control in ("select", "radio", "checkbox") and not spec.options:
                chk.problems.append(f"{fwhere}.options: required for {spec.control}")
            if spec.column is not None and spec.column not in DATASET_COLUMNS:
                chk.problems.append(f"{fwhere}.column: {spec.column!r} not a dataset column")
            fields.append(spec)
        if not fields:
            chk.problems.append(f"{where}.form.fields: at least one field required")
        method = chk.get(form_raw, "method", where + ".form", str, "GET").upper()
        if method not in ("GET", "POST"):
            chk.problems.append(f"{where}.form.method: must be GET or POST")
        form = FormSpec(fields, method, chk.get(form_raw, "action", where + ".form", str, "search"),
                        chk.get(form_raw, "submit", where + ".form", str, "Search"))

        rows = dataset(chk.get(raw, "dataset", where, str, required=True), where + ".dataset")
        res = chk.get(raw, "results", where, dict, {})
        columns = []
        for j, cr in enumerate(chk.get(res, "columns", where + ".results", list, [])):
            cwhere = f"{where}.results.columns[{j}]"
            col = chk.get(cr, "column", cwhere, str, required=True)
            style = chk.get(cr, "style", cwhere, str, "header")
            if col is not None and col not in DATASET_COLUMNS:
                chk.problems.append(f"{cwhere}.column: {col!r} not a dataset column")
            if style not in _COLUMN_STYLES:
                chk.problems.append(f"{cwhere}.style: {style!r} not in {sorted(_COLUMN_STYLES)}")
            columns.append(ColumnSpec(col or "", chk.get(cr, "label", cwhere, str, col or ""), style))
        if not columns:
            columns = [ColumnSpec(c, c) for c in ("Title", "Author", "Published By")]
        style = chk.get(res, "style", where + ".results", str, "table")
        if style not in ("table", "list"):
            chk.problems.append(f"{where}.results.style: must be table or list")
        per_page = chk.get(res, "per_page", where + ".results", int, 10)
        if per_page is not None and per_page < 1:
            chk.problems.append(f"{where}.results.per_page: must be positive")

        beh = chk.get(raw, "behaviors", where, dict, {})
        unavailable = tuple(chk.get(beh, "unavailable", where + ".behaviors", list, []))
        known = {r.get("ISBN") for r in rows}
        for isbn in unavailable:
            if rows and isbn not in known:
                chk.problems.append(f"{where}.behaviors.unavailable: ISBN {isbn} not in dataset")
        mount = chk.get(raw, "mount", where, str, "/")
        if mount and not mount.startswith("/"):
            chk.problems.append(f"{where}.mount: must start with '/'")
        sites.append(SiteSpec(
            name=name or f"site{i}", form=form, dataset=rows, columns=columns,
            style=style or "table", per_page=per_page or 10, port=port or 0, mount=mount or "/",
            landing_redirects=chk.get(raw, "landing_redirects", where, int, 0),
            search_failures=chk.get(beh, "search_failures", where + ".behaviors", int, 0),
            search_error=chk.get(beh, "search_error", where + ".behaviors", bool, False),
            unavailable=unavailable,
        ))
    if not sites and not chk.problems:
        chk.problems.append("$.sites: at least one site required")
    if chk.problems:
        raise ManifestError(chk.problems, source)
    return SiteManifest(sites, seeds, source)


def load_manifest(path) -> SiteManifest:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"], str(path))
    return parse_manifest(data, path.parent, str(path))


def default_manifest_path() -> Path:
    return Path(str(resources.files("hiddenweb.fixtures").joinpath("data/default_manifest.json")))


def default_manifest() -> SiteManifest:
    return load_manifest(default_manifest_path())

"""Record extraction from search response pages.

Result lists are found as the most repeated tag path on the page (outside
any form), and every repeated sub-element is tied to a concept by the text
that labels it: a table header, an inline ``Label:`` prefix, or the tag's own
class/itemprop metadata. Values with an unmistakable shape (ISBN-13, prices)
are recognised when no label is available.
"""

from __future__ import annotations

import datetime as _dt
import logging
import re
from collections import Counter
from dataclasses import dataclass, field, fields as dc_fields
from typing import Dict, List, Optional, Sequence, Tuple

from .forms import WebPage, parse_html
from .matcher import (DEFAULT_THRESHOLD, LabelLexicon, Scorer, default_lexicon,
                      score_label_match)

logger = logging.getLogger(__name__)

MIN_REPETITIONS = 3
ERROR_PAGE_PHRASES = ("no results", "not found", "0 results", "error")
INVALID_RECORD_PHRASES = ("out of stock", "not available", "unavailable")
RECORD_FIELDS = ("isbn", "title", "author", "publisher", "keywords", "price", "availability")

_SKIP_TAGS = {"script", "style", "head", "title", "meta", "link", "noscript"}
_LABEL_TAGS = {"b", "strong", "label", "em", "dt", "i"}
_INLINE_LABEL = re.compile(r"^\s*([^:\n]{1,40}?)\s*:\s*(.*)$", re.S)
_ISBN = re.compile(r"^(?:isbn(?:-?1[03])?[:\s]*)?((?:97[89])[\d\- ]{10,16})$", re.I)
_PRICE = re.compile(r"^(?:[$£€¥₹]|rs\.?|usd|inr|eur|gbp)\s?\d[\d,]*(?:\.\d+)?$"
                    r"|^\d[\d,]*(?:\.\d+)?\s?(?:[$£€¥₹]|usd|inr|eur|gbp)$", re.I)


class NoTemplate(Exception):
    """Raised when no tag path repeats often enough to be a result list."""


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def normalize_key_part(text: Optional[str]) -> str:
    if not text:
        return ""
    stripped = re.sub(r"[^\w\s]|_", "", text.casefold())
    return " ".join(stripped.split())


@dataclass
class DataRecord:
    isbn: Optional[str] = None
    title: Optional[str] = None
    author: Optional[str] = None
    publisher: Optional[str] = None
    keywords: Optional[str] = None
    price: Optional[str] = None
    availability: Optional[str] = None
    source_url: str = ""
    extracted_at: str = field(default_factory=_now)
    # unlabelled cells, kept for validity filtering only
    extras: Dict[str, str] = field(default_factory=dict, compare=False, repr=False)

    @property
    def dedup_key(self) -> str:
        return normalize_key_part(self.title) + "§" + normalize_key_part(self.author)

    @property
    def is_valid(self) -> bool:
        return bool(self.title or self.isbn)

    def as_dict(self) -> Dict[str, str]:
        return {f.name: getattr(self, f.name) or "" for f in dc_fields(self) if f.name != "extras"}

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "DataRecord":
        known = {f.name for f in dc_fields(cls)} - {"extras"}
        kwargs = {k: (v if v != "" else None) for k, v in data.items() if k in known}
        kwargs["source_url"] = data.get("source_url", "") or ""
        kwargs["extracted_at"] = data.get("extracted_at", "") or ""
        return cls(**kwargs)


@dataclass(frozen=True)
class TemplateField:
    subpath: str
    concept: str
    score: float
    source: str  # header | inline | meta | pattern
    label: Optional[str] = None  # inline prefix stripped from values


@dataclass(frozen=True)
class RecordTemplate:
    signature: str
    fields: Tuple[TemplateField, ...]
    repetitions: int
    unassigned: Tuple[Tuple[str, str], ...] = ()  # (subpath, label text) pairs left unmapped

    def concept_of(self, subpath: str) -> Optional[str]:
        for f in self.fields:
            if f.subpath == subpath:
                return f.concept
        return None


# -- tree helpers -----------------------------------------------------------

def _step(el) -> str:
    cls = el.get("class") or ""
    return el.tag.lower() + "".join("." + c for c in sorted(set(cls.split())))


def _signature(el) -> str:
    steps = [_step(el)]
    for anc in el.iterancestors():
        steps.append(_step(anc))
    return "/".join(reversed(steps))


def _elements(el):
    return [c for c in el if isinstance(c.tag, str) and c.tag.lower() not in _SKIP_TAGS]


def _text(el) -> str:
    return " ".join(el.text_content().split())


def _has_text(el) -> bool:
    return any(t.strip() for t in el.itertext())


def _text_flags(root) -> Dict[object, bool]:
    """Whether each element has visible text, computed bottom-up in one pass."""
    flags: Dict[object, bool] = {}
    # reversed document order visits every child before its parent
    for el in reversed(list(root.iter())):
        if not isinstance(el.tag, str):
            flags[el] = False
            continue
        flags[el] = bool(el.text and el.text.strip()) or any(
            flags[c] or bool(c.tail and c.tail.strip()) for c in el)
    return flags


def _is_record_like(el, flags: Dict[object, bool]) -> bool:
    filled = sum(1 for c in _elements(el) if flags[c])
    # a table row is a record even with a single column
    return filled >= 2 or (filled == 1 and el.tag.lower() == "tr")


def _is_header_row(el) -> bool:
    cells = [c for c in _elements(el) if _has_text(c)]
    return bool(cells) and all(c.tag.lower() == "th" for c in cells)


def _candidates(root) -> Dict[str, list]:
    groups: Dict[str, list] = {}
    # explicit stack instead of root.iter() so form subtrees are skipped whole
    flags = _text_flags(root)
    # tag-path signatures are built on the way down rather than from ancestors
    stack = [(root, _signature(root.getparent()) if root.getparent() is not None else "")]
    while stack:
        el, parent_sig = stack.pop()
        if not isinstance(el.tag, str):
            continue
        tag = el.tag.lower()
        if tag in _SKIP_TAGS or tag == "form":
            continue
        sig = parent_sig + "/" + _step(el) if parent_sig else _step(el)
        stack.extend((c, sig) for c in reversed(el))
        if tag not in ("html", "body") and _is_record_like(el, flags):
            groups.setdefault(sig, []).append(el)
    return groups


def _subpaths(el) -> List[Tuple[str, object]]:
    seen: Counter = Counter()
    out = []
    for child in _elements(el):
        step = _step(child)
        out.append((f"{step}[{seen[step]}]", child))
        seen[step] += 1
    return out


def _members(root, signature: str) -> list:
    return [el for el in _candidates(root).get(signature, ())]


# -- page-level checks --------------------------------------------------------

def _visible_text(root) -> str:
    parts = []
    for el in root.iter():
        if not isinstance(el.tag, str):
            continue
        if el.tag.lower() in _SKIP_TAGS:
            if el.tail:
                parts.append(el.tail)
            continue
        if el.text:
            parts.append(el.text)
        if el.tail:
            parts.append(el.tail)
    return " ".join(" ".join(parts).split())


def _phrase_hit(text: str, phrases: Sequence[str]) -> Optional[str]:
    lowered = text.casefold()
    for phrase in phrases:
        if re.search(r"(?<!\w)" + re.escape(phrase.casefold()) + r"(?!\w)", lowered):
            return phrase
    return None


def is_error_page(page: WebPage, phrases: Sequence[str] = ERROR_PAGE_PHRASES,
                  template: Optional[RecordTemplate] = None) -> bool:
    """True for HTTP errors, pages announcing failure, and pages without a result list.

    With ``template`` given, a page carrying at least one instance of the
    template's signature counts as having a result list even when it repeats
    fewer than ``MIN_REPETITIONS`` times.
    """
    if page.status >= 400:
        return True
    root = parse_html(page.body)
    if root is None:
        return True
    if _phrase_hit(_visible_text(root), phrases):
        return True
    groups = _candidates(root)
    if template is not None and groups.get(template.signature):
        return not any(not _is_header_row(m) for m in groups[template.signature])
    return not any(len(v) >= MIN_REPETITIONS for v in groups.values())


# -- template detection -------------------------------------------------------

def _best_concept(label: str, concepts: Sequence[str], lexicon: LabelLexicon,
                  threshold: float, scorer: Scorer) -> Tuple[Optional[str], float]:
    best, best_score = None, 0.0
    for concept in concepts:
        s = scorer(label, concept, lexicon)
        if s > best_score:
            best, best_score = concept, s
    if best is None or best_score < threshold:
        return None, best_score
    return best, best_score


def _inline_label(child) -> Optional[str]:
    kids = _elements(child)
    if kids and kids[0].tag.lower() in _LABEL_TAGS and (child.text or "").strip() == "":
        label = _text(kids[0]).rstrip(":").strip()
        if label and (kids[0].tail or "").strip() or len(kids) > 1:
            return label
    m = _INLINE_LABEL.match(_text(child))
    if m and m.group(2).strip():
        return m.group(1).strip()
    return None


def _meta_labels(child) -> List[str]:
    labels = []
    for attr in ("itemprop", "data-field", "data-label", "title"):
        if child.get(attr):
            labels.append(child.get(attr))
    labels.extend((child.get("class") or "").replace("-", " ").replace("_", " ").split())
    return labels


def _value_pattern(values: Sequence[str], lexicon: LabelLexicon) -> Optional[str]:
    values = [v for v in values if v]
    if not values:
        return None
    if all(_ISBN.match(v) and len(re.sub(r"\D", "", v)) == 13 for v in values):
        return lexicon.canonical("isbn") or "ISBN"
    if all(_PRICE.match(v) for v in values):
        return lexicon.canonical("price") or "Price"
    return None


def _header_labels(members) -> Dict[int, str]:
    header = next((m for m in members if _is_header_row(m)), None)
    if header is None:
        first = next((m for m in members if not _is_header_row(m)), None)
        table = next((a for a in first.iterancestors() if a.tag.lower() == "table"), None) \
            if first is not None else None
        if table is not None:
            header = next((tr for tr in table.iter("tr") if _is_header_row(tr)), None)
    if header is None:
        return {}
    return {i: _text(c) for i, c in enumerate(_elements(header))}


def detect_template(page: WebPage, concepts: Optional[Sequence[str]] = None,
                    lexicon: Optional[LabelLexicon] = None,
                    threshold: float = DEFAULT_THRESHOLD,
                    scorer: Scorer = score_label_match) -> RecordTemplate:
    """Find the repeating result region and tie its sub-elements to concepts."""
    root = parse_html(page.body)
    if root is None:
        raise NoTemplate(f"unparseable page {page.url}")
    groups = _candidates(root)
    viable = [s for s, els in groups.items() if len(els) >= MIN_REPETITIONS]
    if not viable:
        raise NoTemplate(f"no tag path repeats {MIN_REPETITIONS}+ times on {page.url}")
    return _induce(groups, viable, concepts, lexicon, threshold, scorer)


def detect_site_template(pages: Sequence[WebPage], concepts: Optional[Sequence[str]] = None,
                         lexicon: Optional[LabelLexicon] = None,
                         threshold: float = DEFAULT_THRESHOLD,
                         scorer: Scorer = score_label_match,
                         blank: Sequence[WebPage] = ()) -> RecordTemplate:
    """Like :func:`detect_template`, pooling repetitions over several pages of one site.

    Answers to narrow queries often hold one or two records each; together
    they still show the record structure. Regions whose text never varies
    (navigation, footers) are boilerplate and never chosen. A table whose
    header row precedes a single data row also qualifies.

    ``blank`` pages come from the same site but list no records (its landing
    page, say). Any tag path found on them is boilerplate, and a record-like
    region found only on the answers needs no repetition at all.
    """
    groups: Dict[str, list] = {}
    for page in pages:
        root = parse_html(page.body)
        if root is None:
            continue
        for sig, els in _candidates(root).items():
            groups.setdefault(sig, []).extend(els)
    boiler = set()
    for page in blank:
        root = parse_html(page.body)
        if root is not None:
            boiler.update(_signature(el) for el in root.iter() if isinstance(el.tag, str))

    def viable_group(sig, els):
        rows = [e for e in els if not _is_header_row(e)]
        if not rows or sig in boiler:
            return False
        if boiler:
            return True
        if len({_text(e) for e in els}) < 2:
            return False
        # a header row announces a record table, so one data row is enough
        return len(els) >= MIN_REPETITIONS or len(rows) < len(els)

    viable = [s for s, els in groups.items() if viable_group(s, els)]
    if not viable:
        raise NoTemplate(f"no record region found across {len(pages)} pages")
    return _induce(groups, viable, concepts, lexicon, threshold, scorer)


def _induce(groups: Dict[str, list], viable: List[str], concepts, lexicon, threshold,
            scorer) -> RecordTemplate:
    lexicon = lexicon or default_lexicon()
    concepts = list(concepts) if concepts is not None else lexicon.canonical_labels
    order = {sig: i for i, sig in enumerate(groups)}
    signature = max(viable, key=lambda s: (len(groups[s]), s.count("/"), -order[s]))
    members = groups[signature]
    records = [m for m in members if not _is_header_row(m)]
    headers = _header_labels(members)

    # gather, per sub-path, the label evidence across all repetitions
    positions: Dict[str, int] = {}
    inline: Dict[str, Counter] = {}
    meta: Dict[str, List[str]] = {}
    values: Dict[str, List[str]] = {}
    for rec in records:
        for pos, (key, child) in enumerate(_subpaths(rec)):
            positions.setdefault(key, pos)
            values.setdefault(key, []).append(_text(child))
            lab = _inline_label(child)
            if lab:
                inline.setdefault(key, Counter())[lab] += 1
            meta.setdefault(key, _meta_labels(child))

    proposals: List[TemplateField] = []
    unassigned = []
    for key, pos in positions.items():
        chosen = None
        header = headers.get(pos)
        if header:
            c, s = _best_concept(header, concepts, lexicon, threshold, scorer)
            if c:
                chosen = TemplateField(key, c, s, "header")
        if chosen is None and key in inline:
            label = inline[key].most_common(1)[0][0]
            c, s = _best_concept(label, concepts, lexicon, threshold, scorer)
            if c:
                chosen = TemplateField(key, c, s, "inline", label)
        if chosen is None:
            for lab in meta.get(key, ()):
                c, s = _best_concept(lab, concepts, lexicon, threshold, scorer)
                if c and (chosen is None or s > chosen.score):
                    chosen = TemplateField(key, c, s, "meta")
        if chosen is None:
            c = _value_pattern(values[key], lexicon)
            if c:
                chosen = TemplateField(key, c, 0.0, "pattern")
        if chosen is None:
            label = header or (inline[key].most_common(1)[0][0] if key in inline else "")
            unassigned.append((key, label))
        else:
            proposals.append(chosen)

    rank = {"header": 0, "inline": 1, "meta": 2, "pattern": 3}
    taken, kept = set(), []
    for f in sorted(proposals, key=lambda f: (rank[f.source], -f.score, positions[f.subpath])):
        if f.concept in taken:
            unassigned.append((f.subpath, f.label or headers.get(positions[f.subpath], "")))
            continue
        taken.add(f.concept)
        kept.append(f)
    kept.sort(key=lambda f: positions[f.subpath])
    return RecordTemplate(signature, tuple(kept), len(members), tuple(unassigned))


# -- extraction --------------------------------------------------------------

def _strip_label(value: str, label: Optional[str]) -> str:
    if label:
        m = re.match(r"^\s*" + re.escape(label) + r"\s*:?\s*", value, re.I)
        if m:
            return value[m.end():].strip()
    return value


def extract_rows(page: WebPage, template: RecordTemplate) -> List[Dict[str, str]]:
    """Concept-to-value dicts, one per repetition of the template on ``page``.

    Unassigned sub-elements appear under their sub-path key prefixed with ``@``.
    """
    root = parse_html(page.body)
    if root is None:
        return []
    by_key = {f.subpath: f for f in template.fields}
    rows = []
    for member in _members(root, template.signature):
        if _is_header_row(member):
            continue
        row: Dict[str, str] = {}
        for key, child in _subpaths(member):
            text = _text(child)
            f = by_key.get(key)
            if f is None:
                if text:
                    row["@" + key] = text
                continue
            text = _strip_label(text, f.label)
            if text:
                row[f.concept] = text
        rows.append(row)
    return rows


def field_for_concept(concept: str, lexicon: LabelLexicon) -> Optional[str]:
    for name in RECORD_FIELDS:
        if score_label_match(concept, name, lexicon) == 1.0:
            return name
    return None


def extract_records(page: WebPage, template: RecordTemplate,
                    lexicon: Optional[LabelLexicon] = None) -> List[DataRecord]:
    lexicon = lexicon or default_lexicon()
    stamp = _now()
    out = []
    for row in extract_rows(page, template):
        rec = DataRecord(source_url=page.url, extracted_at=stamp)
        for key, value in row.items():
            name = None if key.startswith("@") else field_for_concept(key, lexicon)
            if name is None:
                rec.extras[key] = value
            elif getattr(rec, name) is None:
                setattr(rec, name, value)
        if not rec.is_valid:
            logger.info("dropping record without title or isbn from %s: %r", page.url, row)
            continue
        out.append(rec)
    return out


def filter_invalid(records: Sequence[DataRecord],
                   phrases: Sequence[str] = INVALID_RECORD_PHRASES) -> List[DataRecord]:
    """Drop records whose availability (or any unlabelled cell) reads as unavailable."""
    kept = []
    for rec in records:
        cells = [rec.availability or "", *rec.extras.values()]
        if any(_phrase_hit(c, phrases) for c in cells):
            continue
        kept.append(rec)
    return kept

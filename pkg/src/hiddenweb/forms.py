"""Search-form detection over fetched HTML pages.

A page is scanned for ``<form>`` elements; each one that carries at least one
user-fillable control becomes a :class:`SearchForm` whose fields record the
label a human would read next to the control, the control kind and the set
of values the control accepts.
"""

from __future__ import annotations

import codecs
import enum
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple
from urllib.parse import urljoin, urlsplit, urlunsplit

import lxml.etree
import lxml.html

logger = logging.getLogger(__name__)

_DEFAULT_PORTS = {"http": 80, "https": 443}


def canonicalize_url(url: str) -> str:
    """Lowercase scheme and host, drop default port and fragment."""
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    try:
        port = parts.port
    except ValueError:
        port = None
    netloc = host
    if parts.username:
        auth = parts.username + (f":{parts.password}" if parts.password else "")
        netloc = f"{auth}@{host}"
    if port is not None and _DEFAULT_PORTS.get(scheme) != port:
        netloc = f"{netloc}:{port}"
    path = parts.path or ("/" if netloc else "")
    return urlunsplit((scheme, netloc, path, parts.query, ""))


_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?([A-Za-z0-9_.:-]+)""", re.I)


def decode_body(raw: bytes, content_type: Optional[str] = None) -> str:
    """Decode a response body, preferring a declared charset over UTF-8.

    Undeclared or unsupported charsets fall back to UTF-8 with replacement
    characters, so decoding never raises.
    """
    declared = None
    if content_type:
        m = re.search(r"charset\s*=\s*[\"']?([^\s;\"']+)", content_type, re.I)
        if m:
            declared = m.group(1)
    if declared is None:
        m = _META_CHARSET.search(raw[:4096])
        if m:
            declared = m.group(1).decode("ascii", "ignore")
    encoding = "utf-8"
    if declared:
        try:
            encoding = codecs.lookup(declared).name
        except LookupError:
            logger.debug("unsupported charset %r, using utf-8", declared)
    return raw.decode(encoding, errors="replace")


@dataclass(frozen=True)
class WebPage:
    url: str
    body: str
    status: int = 200
    fetched_at: float = field(default_factory=time.time)
    redirects: int = 0

    def __post_init__(self):
        object.__setattr__(self, "url", canonicalize_url(self.url))

    @classmethod
    def from_bytes(cls, url: str, raw: bytes, status: int = 200,
                   content_type: Optional[str] = None, redirects: int = 0) -> "WebPage":
        return cls(url=url, body=decode_body(raw, content_type), status=status,
                   redirects=redirects)


class Control(str, enum.Enum):
    TEXT_BOX = "TextBox"
    SELECT_LIST = "SelectList"
    CHECKBOX = "Checkbox"
    RADIO = "Radio"
    HIDDEN = "Hidden"
    SUBMIT = "Submit"

    @property
    def fillable(self) -> bool:
        return self not in (Control.HIDDEN, Control.SUBMIT)

    @property
    def finite(self) -> bool:
        return self in (Control.SELECT_LIST, Control.CHECKBOX, Control.RADIO)


@dataclass(frozen=True)
class FieldDomain:
    """Values a control accepts: ``values`` for a finite domain, ``None`` for free text."""

    values: Optional[Tuple[str, ...]] = None

    @classmethod
    def finite(cls, values: Sequence[str]) -> "FieldDomain":
        return cls(tuple(dict.fromkeys(values)))

    @classmethod
    def infinite(cls) -> "FieldDomain":
        return cls(None)

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    def __contains__(self, value: str) -> bool:
        return self.values is None or value in self.values


@dataclass(frozen=True)
class FormField:
    name: str
    label: str
    control: Control
    domain: FieldDomain
    default_value: Optional[str] = None
    # option text for finite domains, parallel to domain.values
    option_labels: Tuple[str, ...] = ()

    @property
    def fillable(self) -> bool:
        return self.control.fillable


class FormKind(str, enum.Enum):
    SINGLE_ATTRIBUTE = "SingleAttribute"
    MULTI_ATTRIBUTE = "MultiAttribute"


@dataclass(frozen=True)
class SearchForm:
    source_url: str
    action_url: str
    method: str
    fields: Tuple[FormField, ...]

    @property
    def fillable_indices(self) -> List[int]:
        return [i for i, f in enumerate(self.fields) if f.fillable]

    @property
    def kind(self) -> FormKind:
        if len(self.fillable_indices) == 1:
            return FormKind.SINGLE_ATTRIBUTE
        return FormKind.MULTI_ATTRIBUTE


# -- parsing ---------------------------------------------------------------

_TEXT_TYPES = {"", "text", "search", "email", "number", "tel", "url", "password"}
_SUBMIT_TYPES = {"submit", "image"}
_SKIPPED_TYPES = {"file", "reset", "button", "color", "range", "date",
                  "datetime-local", "month", "week", "time"}
_BLOCK_TAGS = {"div", "p", "li", "dd", "dt", "fieldset", "section", "form",
               "td", "th", "tr", "table", "span", "label", "body"}
_TRAILING_PUNCT = " \t\r\n:*?.,;-–— "
_CONTROL_TAGS = {"input", "select", "textarea", "button"}


def parse_html(body: str) -> Optional[lxml.html.HtmlElement]:
    """Error-tolerant parse; returns ``None`` when nothing parseable remains."""
    if not body or not body.strip():
        return None
    try:
        return lxml.html.document_fromstring(body)
    except (lxml.etree.ParserError, ValueError) as exc:
        logger.debug("unparseable page: %s", exc)
        return None


def _tag(el) -> str:
    return el.tag.lower() if isinstance(el.tag, str) else ""


def _clean_label(text: str) -> str:
    return " ".join(text.split()).strip(_TRAILING_PUNCT)


def _controls(form_el) -> Iterator:
    for el in form_el.iter():
        if _tag(el) in ("input", "select", "textarea", "button"):
            yield el


def _control_kind(el) -> Optional[Control]:
    tag = _tag(el)
    if tag == "select":
        return Control.SELECT_LIST
    if tag == "textarea":
        return Control.TEXT_BOX
    typ = (el.get("type") or "").strip().lower()
    if tag == "button":
        return Control.SUBMIT if typ in ("", "submit") else None
    if typ in _TEXT_TYPES:
        return Control.TEXT_BOX
    if typ == "hidden":
        return Control.HIDDEN
    if typ in _SUBMIT_TYPES:
        return Control.SUBMIT
    if typ == "checkbox":
        return Control.CHECKBOX
    if typ == "radio":
        return Control.RADIO
    if typ in _SKIPPED_TYPES:
        return None
    return Control.TEXT_BOX  # unknown types render as text boxes


def _text_chunks_before(container, target) -> Optional[str]:
    """Last non-empty text in ``container`` before ``target`` and after any earlier control."""
    chunk = None
    skip_depth = 0
    for event, el in lxml.etree.iterwalk(container, events=("start", "end")):
        if not isinstance(el.tag, str):
            if event == "end" and el.tail and el.tail.strip() and not skip_depth:
                chunk = el.tail
            continue
        tag = el.tag.lower()
        opaque = tag in _CONTROL_TAGS or tag in ("script", "style")
        if event == "start":
            if el is target:
                return chunk
            if opaque:
                skip_depth += 1
                if tag in _CONTROL_TAGS and skip_depth == 1:
                    chunk = None
            elif not skip_depth and el.text and el.text.strip():
                chunk = el.text
        else:
            if opaque:
                skip_depth -= 1
            if el is not container and not skip_depth and el.tail and el.tail.strip():
                chunk = el.tail
    return None


def _preceding_text(field_el, form_el) -> Optional[str]:
    scopes = []
    for anc in field_el.iterancestors():
        tag = _tag(anc)
        if tag in ("td", "th", "tr") or tag in _BLOCK_TAGS:
            scopes.append(anc)
        if anc is form_el:
            break
    # a cell, then its row, then the nearest block: each is an independent scope
    ordered = []
    cell = next((a for a in scopes if _tag(a) in ("td", "th")), None)
    row = next((a for a in scopes if _tag(a) == "tr"), None)
    block = next((a for a in scopes if _tag(a) not in ("td", "th", "tr", "table")), None)
    for scope in (cell, row, block):
        if scope is not None and scope not in ordered:
            ordered.append(scope)
    for scope in ordered:
        text = _text_chunks_before(scope, field_el)
        if text and _clean_label(text):
            return text
    return None


def extract_field_label(form_el, field_el, root=None) -> str:
    """Resolve the human-readable label of a control.

    Tries, in order: a ``<label for=...>`` bound to the control's id, an
    enclosing ``<label>``, the nearest preceding text in the same cell, row or
    block, the ``placeholder`` attribute, and finally the ``name`` attribute.
    """
    root = root if root is not None else form_el.getroottree().getroot()
    el_id = field_el.get("id")
    if el_id:
        for lab in root.iter("label"):
            if lab.get("for") == el_id:
                text = _clean_label(lab.text_content())
                if text:
                    return text
    for anc in field_el.iterancestors():
        if _tag(anc) == "label":
            text = _text_chunks_before(anc, field_el) or ""
            text = _clean_label(text) or _clean_label(_label_text_without_controls(anc))
            if text:
                return text
            break
        if anc is form_el:
            break
    text = _preceding_text(field_el, form_el)
    if text and _clean_label(text):
        return _clean_label(text)
    placeholder = _clean_label(field_el.get("placeholder") or "")
    if placeholder:
        return placeholder
    return _clean_label(field_el.get("name") or "") or (field_el.get("name") or "")


def _label_text_without_controls(label_el) -> str:
    parts = [label_el.text or ""]
    for child in label_el:
        if _tag(child) not in ("input", "select", "textarea", "button", "option"):
            parts.append(child.text_content())
        parts.append(child.tail or "")
    return " ".join(parts)


def _option_value(opt) -> str:
    value = opt.get("value")
    if value is None:
        value = " ".join(opt.text_content().split())
    return value


def extract_field_domain(field_els) -> FieldDomain:
    """Finite domain for selects and radio/checkbox groups, infinite for text."""
    first = field_els[0]
    kind = _control_kind(first)
    if kind is Control.SELECT_LIST:
        return FieldDomain.finite([_option_value(o) for o in first.iter("option")])
    if kind in (Control.RADIO, Control.CHECKBOX):
        return FieldDomain.finite([el.get("value", "on") for el in field_els])
    return FieldDomain.infinite()


def _default_value(kind: Control, els) -> Optional[str]:
    first = els[0]
    if kind is Control.SELECT_LIST:
        options = list(first.iter("option"))
        for opt in options:
            if opt.get("selected") is not None:
                return _option_value(opt)
        return _option_value(options[0]) if options else None
    if kind in (Control.RADIO, Control.CHECKBOX):
        for el in els:
            if el.get("checked") is not None:
                return el.get("value", "on")
        return None
    if _tag(first) == "textarea":
        return first.text or None
    return first.get("value")


def _build_form(form_el, page_url: str, root) -> Optional[SearchForm]:
    groups: List[Tuple[Control, str, list]] = []
    index = {}
    for el in _controls(form_el):
        kind = _control_kind(el)
        if kind is None or el.get("disabled") is not None:
            continue
        name = (el.get("name") or "").strip()
        if not name:
            continue  # unnamed controls are never submitted
        if kind in (Control.RADIO, Control.CHECKBOX) and (kind, name) in index:
            groups[index[(kind, name)]][2].append(el)
            continue
        index[(kind, name)] = len(groups)
        groups.append((kind, name, [el]))

    fields = []
    for kind, name, els in groups:
        domain = extract_field_domain(els)
        if kind is Control.SELECT_LIST and not domain.values:
            continue  # a select without options cannot be filled
        option_labels: Tuple[str, ...] = ()
        if kind is Control.SELECT_LIST:
            labels = {}
            for opt in els[0].iter("option"):
                labels.setdefault(_option_value(opt), " ".join(opt.text_content().split()))
            option_labels = tuple(labels[v] for v in domain.values)
        fields.append(FormField(
            name=name,
            label=(extract_field_label(form_el, els[0], root) if kind.fillable else name),
            control=kind,
            domain=domain,
            default_value=_default_value(kind, els),
            option_labels=option_labels,
        ))
    if not any(f.fillable for f in fields):
        return None
    action = (form_el.get("action") or "").strip()
    method = (form_el.get("method") or "get").strip().upper()
    if method not in ("GET", "POST"):
        method = "GET"
    action_url = canonicalize_url(urljoin(page_url, action)) if action else page_url
    return SearchForm(source_url=page_url, action_url=action_url, method=method,
                      fields=tuple(fields))


def detect_forms(page: WebPage) -> List[SearchForm]:
    """Return one :class:`SearchForm` per FORM element with a fillable control."""
    root = parse_html(page.body)
    if root is None:
        logger.info("no parseable markup at %s", page.url)
        return []
    forms = []
    for form_el in root.iter("form"):
        try:
            form = _build_form(form_el, page.url, root)
        except ValueError as exc:  # lxml rejects some malformed attribute values
            logger.info("skipping malformed form at %s: %s", page.url, exc)
            continue
        if form is not None:
            forms.append(form)
    return forms

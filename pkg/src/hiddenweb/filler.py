"""Choosing values for mapped form fields and encoding the submission."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
from urllib.parse import urlencode

from .forms import Control, FormField, SearchForm
from .matcher import FieldMapping, LabelLexicon, default_lexicon, score_label_match
from .taskdb import BOOTSTRAP, TaskDatabase

DEFAULT_MAX_SUBMISSIONS = 5
_PLACEHOLDERS = {"", "any", "all", "none", "select", "choose"}


class NoFillableMapping(ValueError):
    pass


def is_placeholder_option(value: str, text: str = "") -> bool:
    for s in (value, text):
        s = " ".join((s or "").split()).casefold().strip("-–— .")
        if s and s not in _PLACEHOLDERS and not s.startswith(("any ", "all ", "select ")):
            return False
    return True


@dataclass(frozen=True)
class FilledForm:
    form: SearchForm
    assignments: Tuple[Tuple[int, str], ...]
    submission_plan_id: int = 0

    def value_of(self, field_index: int) -> Optional[str]:
        return dict(self.assignments).get(field_index)


@dataclass(frozen=True)
class SubmissionRequest:
    method: str
    url: str
    parameters: Tuple[Tuple[str, str], ...]
    encoding: str = "application/x-www-form-urlencoded"

    @property
    def body(self) -> Optional[str]:
        return urlencode(self.parameters) if self.method == "POST" else None

    @property
    def fingerprint(self) -> Tuple[str, str, Tuple[Tuple[str, str], ...]]:
        return (self.method, self.url, self.parameters)


def _choose_finite(field: FormField, concept: str, db: TaskDatabase,
                   lexicon: LabelLexicon) -> str:
    known = db.concept(concept).values
    labels = field.option_labels or field.domain.values
    best, best_score, fallback = None, 0.0, None
    for value, text in zip(field.domain.values, labels):
        if is_placeholder_option(value, text):
            continue
        if fallback is None:
            fallback = value
        score = max((max(score_label_match(value, v, lexicon), score_label_match(text, v, lexicon))
                     for v in known), default=0.0)
        if score > best_score:
            best, best_score = value, score
    if best is not None:
        return best
    if fallback is not None:
        return fallback
    return field.default_value if field.default_value is not None else field.domain.values[0]


def plan_fills(form: SearchForm, mapping: FieldMapping, db: TaskDatabase,
               max_submissions: int = DEFAULT_MAX_SUBMISSIONS,
               lexicon: Optional[LabelLexicon] = None) -> List[FilledForm]:
    """Distinct value assignments for the mapped fields, at most ``max_submissions``.

    Multi-field plans come first and draw every value from one bootstrap row,
    so the combination describes a real record. Then each free-text field is
    filled alone, cycling through its concept's values.
    """
    if not len(mapping):
        raise NoFillableMapping("mapping covers no field")
    lexicon = lexicon or default_lexicon()
    fixed: Dict[int, str] = {}
    text: List[Tuple[int, str]] = []
    for a in mapping:
        fld = form.fields[a.field_index]
        if fld.domain.is_finite:
            fixed[a.field_index] = _choose_finite(fld, a.concept, db, lexicon)
        else:
            text.append((a.field_index, a.concept))

    plans: List[FilledForm] = []
    seen = set()

    def emit(assign: Dict[int, str]):
        full = tuple(sorted({**fixed, **assign}.items()))
        if full and full not in seen:
            seen.add(full)
            plans.append(FilledForm(form, full, len(plans)))

    def row_plans():
        if len(text) < 2:
            return
        for _ in range(sum(1 for r in db.rows if r.origin == BOOTSTRAP)):
            row = db.next_rows(1)[0]
            assign = {i: row.cells[c] for i, c in text if row.cells.get(c)}
            if len(assign) >= 2:
                yield assign

    def single_plans():
        budget = {c: len(db.concept(c).values) for _, c in text}
        active = list(text)
        while active:
            for i, c in list(active):
                if budget[c] <= 0:
                    active.remove((i, c))
                    continue
                budget[c] -= 1
                yield {i: db.lookup_values(c, 1)[0]}

    for src in (row_plans(), single_plans()):
        if len(plans) >= max_submissions:
            break
        for assign in src:
            emit(assign)
            if len(plans) >= max_submissions:
                break
    if not text and len(plans) < max_submissions:
        emit({})
    return plans


def build_submission(filled: FilledForm) -> SubmissionRequest:
    """Encode a filled form the way a browser would submit it."""
    form = filled.form
    assigned = dict(filled.assignments)
    params = []
    submit_seen = False
    for i, fld in enumerate(form.fields):
        if i in assigned:
            params.append((fld.name, assigned[i]))
        elif fld.control is Control.SUBMIT:
            if not submit_seen:
                params.append((fld.name, fld.default_value or ""))
                submit_seen = True
        elif fld.control is Control.HIDDEN:
            params.append((fld.name, fld.default_value or ""))
        elif fld.control is Control.TEXT_BOX:
            params.append((fld.name, ""))
        elif fld.default_value is not None:
            # unchecked radios and checkboxes are omitted, as browsers do
            params.append((fld.name, fld.default_value))
    params = tuple(params)
    if form.method == "GET":
        sep = "&" if "?" in form.action_url else "?"
        url = form.action_url + (sep + urlencode(params) if params else "")
        return SubmissionRequest("GET", url, params)
    return SubmissionRequest("POST", form.action_url, params)

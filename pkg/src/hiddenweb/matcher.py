"""Label matching between form fields and task-database concepts."""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .forms import SearchForm

STOPWORDS = frozenset({"the", "a", "an", "of", "by", "in", "for"})
DEFAULT_THRESHOLD = 0.6

_MARKUP = re.compile(r"<[^>]*>?")
_TOKEN = re.compile(r"[^\W_]+")


class LexiconError(ValueError):
    pass


def normalize_label(raw: str) -> List[str]:
    """Lowercase word tokens with stopwords removed (kept if nothing else remains)."""
    if not raw:
        return []
    text = html.unescape(_MARKUP.sub(" ", raw)).lower()
    tokens = _TOKEN.findall(text)
    kept = [t for t in tokens if t not in STOPWORDS]
    return kept or tokens


def _phrase(raw: str) -> str:
    return " ".join(normalize_label(raw))


class LabelLexicon:
    """Synonym sets keyed by a canonical concept label.

    The file format is one set per line, phrases separated by ``|`` with the
    first phrase canonical; blank lines and ``#`` comments are ignored.
    """

    def __init__(self, synonym_sets: Iterable[Tuple[str, Iterable[str]]]):
        self.synonym_sets: List[Tuple[str, frozenset]] = []
        self._set_of: Dict[str, int] = {}
        for canonical, phrases in synonym_sets:
            idx = len(self.synonym_sets)
            normalized = []
            for raw in [canonical, *phrases]:
                p = _phrase(raw)
                if not p:
                    continue
                owner = self._set_of.get(p)
                if owner is not None and owner != idx:
                    raise LexiconError(
                        f"phrase {p!r} appears in both {self.synonym_sets[owner][0]!r} "
                        f"and {canonical!r}")
                self._set_of[p] = idx
                normalized.append(p)
            if any(c.lower() == canonical.lower() for c, _ in self.synonym_sets):
                raise LexiconError(f"duplicate canonical label {canonical!r}")
            self.synonym_sets.append((canonical, frozenset(normalized)))
        # single-token phrases stand in for each other at token level
        self._token_expansion: Dict[str, frozenset] = {}
        for _, phrases in self.synonym_sets:
            singles = frozenset(p for p in phrases if " " not in p)
            for tok in singles:
                self._token_expansion[tok] = singles

    @classmethod
    def parse(cls, text: str, source: str = "<lexicon>") -> "LabelLexicon":
        sets = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            phrases = [p.strip() for p in line.split("|")]
            if not phrases[0]:
                raise LexiconError(f"{source}:{lineno}: empty canonical phrase")
            sets.append((phrases[0], [p for p in phrases[1:] if p]))
        return cls(sets)

    @classmethod
    def from_file(cls, path) -> "LabelLexicon":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), source=str(path))

    @property
    def canonical_labels(self) -> List[str]:
        return [c for c, _ in self.synonym_sets]

    def set_index(self, label: str) -> Optional[int]:
        return self._set_of.get(_phrase(label))

    def canonical(self, label: str) -> Optional[str]:
        idx = self.set_index(label)
        return None if idx is None else self.synonym_sets[idx][0]

    def expand(self, tokens: Iterable[str]) -> frozenset:
        out = set()
        for tok in tokens:
            out.add(tok)
            out.update(self._token_expansion.get(tok, ()))
        return frozenset(out)


def default_lexicon() -> LabelLexicon:
    text = resources.files("hiddenweb").joinpath("data/books_lexicon.txt").read_text("utf-8")
    return LabelLexicon.parse(text, source="books_lexicon.txt")


def score_label_match(form_label: str, concept_label: str, lexicon: LabelLexicon) -> float:
    a, b = normalize_label(form_label), normalize_label(concept_label)
    if not a or not b:
        return 0.0
    pa, pb = " ".join(a), " ".join(b)
    if pa == pb:
        return 1.0
    ia, ib = lexicon.set_index(pa), lexicon.set_index(pb)
    if ia is not None and ia == ib:
        return 1.0
    ea, eb = lexicon.expand(a), lexicon.expand(b)
    return len(ea & eb) / len(ea | eb)


def exact_label_match(form_label: str, concept_label: str, lexicon=None) -> float:
    """Baseline scorer: 1.0 only when the normalized labels are identical."""
    a = normalize_label(form_label)
    return 1.0 if a and a == normalize_label(concept_label) else 0.0


Scorer = Callable[[str, str, LabelLexicon], float]


@dataclass(frozen=True)
class Assignment:
    field_index: int
    concept: str
    score: float


@dataclass(frozen=True)
class FieldMapping:
    assignments: Tuple[Assignment, ...]
    threshold: float

    def __len__(self):
        return len(self.assignments)

    def __iter__(self):
        return iter(self.assignments)

    def concept_for(self, field_index: int) -> Optional[str]:
        for a in self.assignments:
            if a.field_index == field_index:
                return a.concept
        return None


def assign_greedy(scores: Mapping[Tuple[int, str], float], threshold: float) -> List[Assignment]:
    """Injective assignment taking pairs in descending score order.

    Ties fall to the earlier field, then to the lexicographically smaller concept.
    """
    ranked = sorted(((s, i, c) for (i, c), s in scores.items() if s >= threshold),
                    key=lambda t: (-t[0], t[1], t[2]))
    used_fields, used_concepts, out = set(), set(), []
    for s, i, c in ranked:
        if i in used_fields or c in used_concepts:
            continue
        used_fields.add(i)
        used_concepts.add(c)
        out.append(Assignment(i, c, s))
    return sorted(out, key=lambda a: a.field_index)


def match_form(form: SearchForm, concepts: Sequence[str], lexicon: LabelLexicon,
               threshold: float = DEFAULT_THRESHOLD,
               scorer: Scorer = score_label_match) -> FieldMapping:
    """Map the form's fillable fields onto ``concepts``.

    Fields scoring below ``threshold`` against every concept stay unmapped,
    so a partial mapping is normal; an empty one means the form cannot be
    filled from this database.
    """
    scores = {}
    for i in form.fillable_indices:
        label = form.fields[i].label
        for concept in concepts:
            scores[(i, concept)] = scorer(label, concept, lexicon)
    return FieldMapping(tuple(assign_greedy(scores, threshold)), threshold)

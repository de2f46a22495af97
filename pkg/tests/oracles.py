"""Independent ground truth for fixture crawls.

Nothing here imports the crawler's extraction or matching code; answers are
recomputed from the manifest and its CSV datasets by plain scans.
"""

from urllib.parse import parse_qsl, urlsplit

# rendered dataset column -> DataRecord field
COLUMN_FIELD = {"ISBN": "isbn", "Title": "title", "Author": "author",
                "Published By": "publisher", "Keywords": "keywords", "Price": "price"}
PLACEHOLDERS = {"", "any", "all"}


def expected_rows(site, params):
    """Rows the fixture site should list for ``params``, after dropping unavailable ones."""
    if site.search_error:
        return []
    given = {}
    for k, v in params:
        given.setdefault(k, v)
    rows = list(site.dataset)
    for spec in site.form.fields:
        if spec.column is None:
            continue
        needle = given.get(spec.name, "")
        if needle.strip().lower() in PLACEHOLDERS or needle.strip().startswith("--"):
            continue
        rows = [r for r in rows if needle.lower() in r.get(spec.column, "").lower()]
    rows = rows[:site.per_page]
    return [r for r in rows if r.get("ISBN") not in set(site.unavailable)]


def expected_records(site, params):
    """Multiset of rendered field tuples, comparable with :func:`record_tuples`."""
    cols = [c.column for c in site.columns]
    out = []
    for r in expected_rows(site, params):
        out.append(tuple(sorted((COLUMN_FIELD[c], r.get(c, "")) for c in cols if r.get(c, ""))))
    return sorted(out)


def record_tuples(records, site):
    cols = {COLUMN_FIELD[c.column] for c in site.columns}
    out = []
    for rec in records:
        out.append(tuple(sorted((f, v) for f, v in rec.items() if f in cols and v)))
    return sorted(out)


def page_params(page):
    """Parameters actually sent for a crawled page (query string for GET)."""
    if page.method == "GET":
        return parse_qsl(urlsplit(page.url).query, keep_blank_values=True)
    return list(page.params)


def linear_scan(records, criteria):
    """Conjunctive case-insensitive substring filter over dicts or objects."""
    def get(r, f):
        return (r.get(f) if isinstance(r, dict) else getattr(r, f)) or ""
    active = {f: p for f, p in criteria.items() if p}
    return [r for r in records if all(p.lower() in get(r, f).lower() for f, p in active.items())]


def brute_force_assignment(scores, threshold):
    """Best injective partial assignment by exhaustive enumeration.

    Candidates are ranked by their score list sorted high to low, compared
    lexicographically; on an equal prefix the longer list wins. Returns a set
    of (field, concept) pairs.
    """
    fields = sorted({f for f, _ in scores})
    concepts = sorted({c for _, c in scores})
    best_key, best = None, set()

    def walk(i, used, chosen):
        nonlocal best_key, best
        if i == len(fields):
            key = tuple(sorted((scores[p] for p in chosen), reverse=True))
            if best_key is None or key > best_key:
                best_key, best = key, set(chosen)
            return
        walk(i + 1, used, chosen)
        for c in concepts:
            if c not in used and scores[(fields[i], c)] >= threshold:
                walk(i + 1, used | {c}, chosen + [(fields[i], c)])

    walk(0, frozenset(), [])
    return best


def max_sum_assignment(scores, threshold):
    """Injective partial assignment with the largest score total (for reporting only)."""
    fields = sorted({f for f, _ in scores})
    concepts = sorted({c for _, c in scores})
    best_total, best = -1.0, set()

    def walk(i, used, chosen, total):
        nonlocal best_total, best
        if i == len(fields):
            if total > best_total:
                best_total, best = total, set(chosen)
            return
        walk(i + 1, used, chosen, total)
        for c in concepts:
            s = scores[(fields[i], c)]
            if c not in used and s >= threshold:
                walk(i + 1, used | {c}, chosen + [(fields[i], c)], total + s)

    walk(0, frozenset(), [], 0.0)
    return best


def lexicon_jaccard(lexicon_text, a, b):
    """Token Jaccard straight from the lexicon file text, by explicit set building."""
    import re
    stop = {"the", "a", "an", "of", "by", "in", "for"}

    def tokens(s):
        toks = re.findall(r"[^\W_]+", s.lower())
        return [t for t in toks if t not in stop] or toks

    singles = []
    for line in lexicon_text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        phrases = [" ".join(tokens(p)) for p in line.split("|") if p.strip()]
        singles.append({p for p in phrases if p and " " not in p})

    def expanded(s):
        out = set()
        for t in tokens(s):
            out.add(t)
            for group in singles:
                if t in group:
                    out |= group
        return out

    ea, eb = expanded(a), expanded(b)
    return len(ea & eb) / len(ea | eb)

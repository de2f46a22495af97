import pytest
from hypothesis import given, settings, strategies as st

from hiddenweb.forms import WebPage
from hiddenweb.taskdb import (EmptyBootstrap, TaskDatabase, UnknownConcept, bootstrap,
                              lookup_values, normalize_value, update)

SEED_LIST_LABELS = ["ISBN", "Title", "Author", "Published By", "Keywords"]


@pytest.fixture
def seed_list_db(seed_page, lexicon):
    return bootstrap([seed_page], lexicon)


def test_bootstrap_reads_every_column(seed_list_db, seed_rows):
    assert seed_list_db.labels == SEED_LIST_LABELS
    assert len(seed_list_db.rows) == len(seed_rows) == 13
    authors = seed_list_db.concept("Author").values
    assert "Kolata, Gina" in authors
    assert "P.Galvin" in authors


def test_bootstrap_values_equal_distinct_seed_cells(seed_list_db, seed_rows):
    # oracle: distinct non-empty cells per column under case/space folding
    for label in SEED_LIST_LABELS:
        seen = {}
        for row in seed_rows:
            v = row[label].strip()
            if v:
                seen.setdefault(" ".join(v.casefold().split()), v)
        assert seed_list_db.concept(label).values == list(seen.values())


def test_first_author_lookup_after_fresh_load(seed_list_db):
    again = TaskDatabase.loads(seed_list_db.dumps())
    assert again.lookup_values("Author", 1) == ["Committee on"]


def test_lookup_zero_and_oversized(seed_list_db):
    assert lookup_values(seed_list_db, "Title", 0) == []
    n = len(seed_list_db.concept("Title").values)
    got = seed_list_db.lookup_values("Title", n + 3)
    assert len(got) == n == len(set(got))


def test_unknown_concept(seed_list_db):
    with pytest.raises(UnknownConcept):
        seed_list_db.lookup_values("Colour", 1)


def test_rotation_is_fair(seed_list_db):
    values = seed_list_db.concept("Published By").values
    seed_list_db.lookup_values("Published By", 2)  # start mid-way
    got = [seed_list_db.lookup_values("Published By", 1)[0] for _ in values]
    assert sorted(got) == sorted(values)


def test_concept_labels_are_case_insensitive(seed_list_db):
    assert seed_list_db.concept("author") is seed_list_db.concept("Author")


def test_update_existing_value_inserts_nothing(seed_list_db):
    assert update(seed_list_db, "Author", ["Kolata, Gina", "  kolata,   GINA "]) == 0


def test_update_new_author(seed_list_db):
    before = len(seed_list_db.rows)
    assert seed_list_db.update("Author", ["Yashwant Singh"], source="http://x.test/") == 1
    assert seed_list_db.update("Author", ["Yashwant Singh"]) == 0
    assert len(seed_list_db.rows) == before + 1
    assert seed_list_db.rows[-1].origin == "update"
    assert seed_list_db.rows[-1].source == "http://x.test/"


def test_update_unknown_label_creates_concept(seed_list_db):
    assert seed_list_db.update("Edition", ["2nd"]) == 1
    assert "Edition" in seed_list_db.labels


def test_no_seed_pages():
    with pytest.raises(EmptyBootstrap):
        bootstrap([], None)


def test_alien_labels_give_one_diagnostic_each(lexicon):
    rows = "".join(f"<tr><td>{i}</td><td>blue</td><td>{i * 3}kg</td></tr>" for i in range(4))
    page = WebPage("http://alien.test/", "<html><body><table><tr><th>Glorp</th><th>Colour</th>"
                   f"<th>Mass</th></tr>{rows}</table></body></html>")
    with pytest.raises(EmptyBootstrap) as err:
        bootstrap([page], lexicon)
    notes = [d for d in err.value.diagnostics if "matches no concept" in d]
    assert len(notes) == 3
    assert any("Glorp" in d for d in notes)


def test_error_status_seed_is_skipped(seed_page, lexicon):
    notes = []
    broken = WebPage("http://seed.test/missing", "<p>gone</p>", status=404)
    db = bootstrap([broken, seed_page], lexicon, diagnostics=notes)
    assert len(db.rows) == 13
    assert any("404" in n for n in notes)


def test_file_round_trip_is_byte_identical(seed_list_db, tmp_path):
    seed_list_db.update("Author", ['Tab\there', 'Quote "q"', "Line\nbreak"])
    path = tmp_path / "db.tsv"
    seed_list_db.save(path)
    loaded = TaskDatabase.load(path)
    assert loaded == seed_list_db
    again = tmp_path / "again.tsv"
    loaded.save(again)
    assert again.read_bytes() == path.read_bytes()
    assert path.read_text().startswith("# domain: books\nISBN\tTitle\tAuthor\t")


def test_normalize_value():
    assert normalize_value("  The   Jungle\tBOOK ") == "the jungle book"


cell = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.dictionaries(st.sampled_from(SEED_LIST_LABELS), cell, min_size=1), max_size=8))
def test_round_trip_property(rows):
    db = TaskDatabase("books", SEED_LIST_LABELS)
    for r in rows:
        if any(v.strip() for v in r.values()):
            db.add_row(r, source="s", fetched_at="t")
    assert TaskDatabase.loads(db.dumps()) == db


@settings(max_examples=100, deadline=None)
@given(st.lists(cell, max_size=10))
def test_update_is_idempotent(values):
    db = TaskDatabase("books", ["Author"])
    update(db, "Author", values)
    snapshot = db.dumps()
    assert update(db, "Author", values) == 0
    assert db.dumps() == snapshot


def test_snapshot_is_independent():
    db = TaskDatabase("books", ["Title"])
    for t in ("a", "b", "c"):
        db.add_row({"Title": t})
    copy = db.snapshot()
    assert copy.lookup_values("Title", 2) == ["a", "b"]
    copy.update("Title", ["d"])
    assert db.lookup_values("Title", 2) == ["a", "b"]
    assert "d" not in db.concept("Title").values
    assert copy.concept("Title").values == ["a", "b", "c", "d"]

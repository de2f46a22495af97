import pytest
from hypothesis import given, settings, strategies as st

from hiddenweb.extractor import RECORD_FIELDS, DataRecord, detect_template, extract_records
from hiddenweb.repository import EmptyCriteria, MergeStats, Repository, StorageError

from oracles import linear_scan


@pytest.fixture
def seed_records(seed_page, lexicon):
    return extract_records(seed_page, detect_template(seed_page, lexicon=lexicon), lexicon)


def _rec(title, author="", **kw):
    return DataRecord(title=title, author=author or None, extracted_at="t0", **kw)


def test_reinserting_seed_rows_drops_all(seed_records):
    repo = Repository()
    assert repo.upsert(seed_records) == MergeStats(13, 0)
    assert repo.upsert(seed_records) == MergeStats(0, 13)
    assert len(repo) == 13


def test_shared_isbn_rows_both_kept(seed_records):
    repo = Repository()
    repo.upsert(seed_records)
    shared = [r for r in repo if r.isbn == "9780340734209"]
    assert sorted(r.title for r in shared) == ["Addison-Wesle", "Second Jungle"]


def test_dedup_key_normalizes_case_space_punctuation():
    repo = Repository()
    stats = repo.upsert([_rec("The Jungle Book", "Kipling, R."),
                         _rec("  the jungle   BOOK!", "kipling r")])
    assert stats == MergeStats(1, 1)


def test_duplicate_enriches_empty_fields():
    repo = Repository()
    repo.upsert([_rec("A", "B", publisher="P")])
    repo.upsert([_rec("a", "b", publisher="Other", price="$3.00", isbn="9780000000001")])
    (r,) = repo.records()
    assert (r.title, r.publisher, r.price, r.isbn) == ("A", "P", "$3.00", "9780000000001")


def test_query_title_jungle(seed_records):
    repo = Repository()
    repo.upsert(seed_records)
    titles = [r.title for r in repo.query(title="jungle")]
    assert titles == ["Lipstick Jungle", "Second Jungle", "The jungle boo", "The Jungle Dur"]
    assert [r.title for r in repo.query(title="JUNGLE", author="dix")] == ["The jungle boo"]


def test_empty_criteria():
    repo = Repository()
    with pytest.raises(EmptyCriteria):
        repo.query(title="", author="")
    with pytest.raises(EmptyCriteria):
        repo.query()
    with pytest.raises(ValueError):
        repo.query(colour="red")


_word = st.text(alphabet="abcAB ,.", max_size=6)
_record = st.builds(lambda t, a, p, k: DataRecord(title=t or "t", author=a or None,
                                                  publisher=p or None, keywords=k or None,
                                                  extracted_at="t0"),
                    _word, _word, _word, _word)
_criteria = st.fixed_dictionaries({}, optional={
    f: st.text(alphabet="abcAB ,.", min_size=1, max_size=2)
    for f in ("title", "author", "publisher", "keywords")})


@settings(max_examples=150, deadline=None)
@given(st.lists(_record, max_size=25), _criteria)
def test_query_equals_linear_scan(records, criteria):
    repo = Repository()
    repo.upsert(records)
    if not any(criteria.values()):
        with pytest.raises(EmptyCriteria):
            repo.query(criteria)
        return
    assert repo.query(criteria) == linear_scan(repo.records(), criteria)


@settings(max_examples=100, deadline=None)
@given(st.lists(_record, max_size=20))
def test_upsert_idempotent_and_conserves_count(records):
    once = Repository()
    stats = once.upsert(records)
    assert stats.inserted + stats.duplicates_dropped == len(records)
    twice = Repository()
    twice.upsert(records)
    twice.upsert(records)
    assert once == twice
    assert len(once) == len({r.dedup_key for r in records})


def test_empty_export_is_header_only(tmp_path):
    path = Repository().export(tmp_path / "out.tsv")
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].split("\t")[:len(RECORD_FIELDS)] == list(RECORD_FIELDS)


@pytest.mark.parametrize("fmt", ["tsv", "jsonl"])
def test_export_import_round_trip(tmp_path, seed_records, fmt):
    repo = Repository()
    repo.upsert(seed_records)
    path = repo.export(tmp_path / f"out.{fmt}", fmt)
    assert len(path.read_text().splitlines()) == 13 + (fmt == "tsv")
    assert Repository.import_file(path) == repo


@settings(max_examples=100, deadline=None)
@given(st.lists(st.builds(DataRecord, title=st.text(min_size=1), author=st.text(),
                          publisher=st.one_of(st.none(), st.text()), extracted_at=st.just("t")),
                max_size=8))
def test_round_trip_survives_awkward_text(records):
    repo = Repository()
    repo.upsert(records)
    for fmt in ("tsv", "jsonl"):
        assert Repository.loads(repo.dumps(fmt), fmt) == repo


def test_file_backed_repository_persists(tmp_path):
    path = tmp_path / "repo.tsv"
    repo = Repository(path)
    repo.upsert([_rec("A", "x"), _rec("B", "y")])
    repo.upsert([_rec("C", "z")])
    repo.upsert([_rec("a", "X", publisher="P")])  # enrichment compacts the file
    again = Repository(path)
    assert again == repo
    assert again.records()[0].publisher == "P"
    assert len(path.read_text().splitlines()) == 4


def test_storage_error_rolls_back(tmp_path):
    repo = Repository(tmp_path / "missing-dir" / "repo.tsv")
    with pytest.raises(StorageError):
        repo.upsert([_rec("A", "x")])
    assert len(repo) == 0


def test_import_rejects_foreign_file(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("colour\tsize\nred\t1\n")
    with pytest.raises(StorageError):
        Repository.import_file(bad)

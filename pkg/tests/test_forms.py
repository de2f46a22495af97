import lxml.html
import pytest
from hypothesis import given, settings, strategies as st

from hiddenweb.fixtures.server import render_landing
from hiddenweb.forms import (Control, FieldDomain, FormKind, WebPage, canonicalize_url,
                             decode_body, detect_forms, extract_field_domain,
                             extract_field_label)

from conftest import html_page


def _label_of(markup, name):
    root = lxml.html.document_fromstring(f"<html><body>{markup}</body></html>")
    form = next(root.iter("form"))
    field = next(el for el in form.iter() if el.get("name") == name)
    return extract_field_label(form, field, root)


def _domain_of(markup, name):
    root = lxml.html.document_fromstring(f"<html><body><form>{markup}</form></body></html>")
    return extract_field_domain([el for el in root.iter() if el.get("name") == name])


def test_page_without_form_has_no_forms():
    assert detect_forms(html_page("<p>Just text</p>")) == []


def test_single_box_form_is_single_attribute():
    page = html_page('<form action="/search"><input name="q"><input type="submit" value="Go">'
                     "</form>")
    (form,) = detect_forms(page)
    assert form.kind is FormKind.SINGLE_ATTRIBUTE
    # an unnamed submit button is never sent, so it is not a field
    assert [f.name for f in form.fields] == ["q"]
    assert form.action_url == "http://shop.test/search"
    assert form.method == "GET"


def test_title_author_publisher_boxes_are_multi_attribute():
    page = html_page('<form method="post" action="find">'
                     '<p>Title <input name="t"></p><p>Author <input name="a"></p>'
                     '<p>Publisher <input name="p"></p></form>')
    (form,) = detect_forms(page)
    assert form.kind is FormKind.MULTI_ATTRIBUTE
    assert [f.label for f in form.fields] == ["Title", "Author", "Publisher"]
    assert form.method == "POST"


def test_form_with_only_submit_is_omitted():
    page = html_page('<form><input type="submit" name="go" value="Go"></form>'
                     '<form><input type="hidden" name="h" value="1"></form>')
    assert detect_forms(page) == []


def test_missing_action_defaults_to_page_url():
    (form,) = detect_forms(html_page("<form><input name=q></form>", url="http://A.test:80/x#f"))
    assert form.action_url == "http://a.test/x"


def test_hidden_and_submit_are_kept_but_not_counted():
    page = html_page('<form><input name="q"><input type="hidden" name="s" value="r">'
                     '<input type="submit" name="go" value="Go"></form>')
    (form,) = detect_forms(page)
    assert [f.control for f in form.fields] == [Control.TEXT_BOX, Control.HIDDEN, Control.SUBMIT]
    assert form.fillable_indices == [0]
    assert form.fields[1].default_value == "r"


def test_label_for_binding():
    assert _label_of('<form><label for="a">Written by</label><input id="a" name="auth"></form>',
                     "auth") == "Written by"


def test_bare_input_falls_back_to_name():
    assert _label_of('<form><input name="isbn"></form>', "isbn") == "isbn"


def test_table_cell_text_precedes_input():
    markup = ('<form><table><tr><td>Published By:</td><td><input name="pb"></td></tr>'
              '<tr><td>Title</td><td><input name="t"></td></tr></table></form>')
    assert _label_of(markup, "pb") == "Published By"
    assert _label_of(markup, "t") == "Title"


def test_enclosing_label_and_placeholder():
    assert _label_of('<form><label>Author name <input name="a"></label></form>', "a") \
        == "Author name"
    assert _label_of('<form><input name="q" placeholder="Book title"></form>', "q") \
        == "Book title"


def test_label_for_beats_surrounding_text():
    markup = ('<form><p>Something else <label for="x">Keywords</label> '
              '<input id="x" name="kw"></p></form>')
    assert _label_of(markup, "kw") == "Keywords"


def test_label_precedence_over_placeholder():
    assert _label_of('<form><p>Title: <input name="t" placeholder="e.g. Dune"></p></form>',
                     "t") == "Title"


def test_select_domain_in_page_order():
    dom = _domain_of("<select name=f><option>Any</option><option>Hardcover</option>"
                     "<option>Paperback</option></select>", "f")
    assert dom == FieldDomain.finite(["Any", "Hardcover", "Paperback"])


def test_select_option_value_attribute_wins():
    dom = _domain_of('<select name=f><option value="">Any</option>'
                     '<option value="hc">Hardcover</option><option value="hc">Dup</option>'
                     "</select>", "f")
    assert dom.values == ("", "hc")


def test_text_input_domain_is_infinite():
    assert not _domain_of('<input name="q">', "q").is_finite


def test_radio_group_domain():
    dom = _domain_of('<input type=radio name=fmt value=new> New '
                     '<input type=radio name=fmt value=used> Used', "fmt")
    assert dom == FieldDomain.finite(["new", "used"])


def test_radio_group_is_one_field(manifest):
    site = manifest.site("select")
    (form,) = detect_forms(WebPage("http://s.test/", render_landing(site)))
    by_name = {f.name: f for f in form.fields}
    assert by_name["cond"].control is Control.RADIO
    assert by_name["cond"].domain.values == ("new", "used")
    assert by_name["cond"].default_value == "new"
    assert by_name["pub"].label == "Publisher"
    assert by_name["title"].label == "Title"


@pytest.mark.parametrize("name,labels", [
    ("single", ["Title"]),
    ("multi", ["Title", "Author", "Publisher", "Keywords"]),
    ("synonym", ["Book Title", "Written by", "Publisher"]),
    ("select", ["Title", "Publisher", "Condition"]),
    ("flaky", ["Title"]),
    ("overlap", ["Title", "Author"]),
])
def test_fixture_landing_labels_match_manifest(manifest, name, labels):
    site = manifest.site(name)
    (form,) = detect_forms(WebPage("http://s.test/", render_landing(site)))
    got = [form.fields[i].label for i in form.fillable_indices]
    assert got == labels
    expected_kind = FormKind.SINGLE_ATTRIBUTE if len(labels) == 1 else FormKind.MULTI_ATTRIBUTE
    assert form.kind is expected_kind


def test_detection_is_deterministic(manifest):
    body = render_landing(manifest.site("multi"))
    a = detect_forms(WebPage("http://s.test/", body, fetched_at=1.0))
    b = detect_forms(WebPage("http://s.test/", body, fetched_at=2.0))
    assert a == b


def test_canonical_url():
    assert canonicalize_url("HTTP://Example.COM:80/a?b=1#frag") == "http://example.com/a?b=1"
    assert canonicalize_url("https://x.org:443") == "https://x.org/"
    assert canonicalize_url("http://x.org:8080/p") == "http://x.org:8080/p"


def test_decode_prefers_declared_charset_and_never_raises():
    assert decode_body("café".encode("latin-1"), "text/html; charset=ISO-8859-1") == "café"
    assert decode_body(b'<meta charset="latin-1">caf\xe9').endswith("café")
    assert "�" in decode_body(b"caf\xe9", None)
    assert decode_body(b"ok", "text/html; charset=bogus-9") == "ok"


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=400))
def test_arbitrary_bytes_never_break_detection(raw):
    forms = detect_forms(WebPage.from_bytes("http://f.test/", raw))
    for form in forms:
        assert form.fields
        assert form.action_url.startswith("http")

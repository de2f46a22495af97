# %% [markdown]
# # One page at a time: forms, label matching, records
#
# This walks the stages the crawler chains together, on pages rendered
# straight from the fixture manifest, without any network.

# %%
from hiddenweb import (WebPage, bootstrap, default_lexicon, detect_forms, detect_template,
                       extract_records, filter_invalid, match_form, plan_fills,
                       build_submission, score_label_match)
from hiddenweb.fixtures import default_manifest
from hiddenweb.fixtures.server import render_landing, render_search, render_seed

manifest = default_manifest()
lexicon = default_lexicon()

# %% [markdown]
# ## Form detection
# Labels come from `<label for>`, surrounding text, placeholders or names.

# %%
site = manifest.site("synonym")
landing = WebPage("http://synonym.test/", render_landing(site))
(form,) = detect_forms(landing)
print(form.method, form.action_url, form.kind)
for f in form.fields:
    print(f"  {f.name:8s} {f.label!r:18s} {f.domain}")

# %% [markdown]
# ## Label matching
# Scores are 1.0 for lexicon synonyms and token Jaccard otherwise.

# %%
for label in ("Book Title", "Written by", "Writer", "Title/Subject", "Price"):
    print(f"{label:14s}", {c: round(score_label_match(label, c, lexicon), 2)
                           for c in ("Title", "Author", "Published By")})

# %% [markdown]
# Build a task database from the seed book list, then map the form's fields
# onto its concepts and plan a few submissions.

# %%
seed = WebPage("http://seed.test/books.html", render_seed(manifest.seed_pages[0]))
db = bootstrap([seed], lexicon)
mapping = match_form(form, db.labels, lexicon)
for a in mapping.assignments:
    print(f"field {form.fields[a.field_index].name!r} -> {a.concept} ({a.score:.2f})")
for plan in plan_fills(form, mapping, db, 3, lexicon):
    req = build_submission(plan)
    print(req.method, req.url, req.body)

# %% [markdown]
# ## Template detection and extraction
# The repeated tag path with the most members wins; header cells name the
# concepts. `filter_invalid` drops rows marked out of stock.

# %%
shop = manifest.site("select")
page = WebPage("http://select.test/search", render_search(shop, []))
template = detect_template(page, lexicon=lexicon)
print(template.signature, [(f.subpath, f.concept, f.source) for f in template.fields])
records = extract_records(page, template, lexicon)
kept = filter_invalid(records)
print(len(records), "records,", len(kept), "in stock")
for r in kept[:3]:
    print(" ", r.title, "|", r.author, "|", r.price)

# %% [markdown]
# # Merging, querying and the valid-page ratio

# %%
from hiddenweb import DataRecord, Repository, valid_page_ratio

repo = Repository()
stats = repo.upsert([
    DataRecord(title="The Jungle Book", author="Rudyard Kipling", isbn="9780140621846"),
    DataRecord(title="Lipstick Jungle", author="Candace Bushnell"),
])
print(stats)

# %% [markdown]
# Records are keyed on normalized (title, author). A second sighting is
# dropped, but it may fill fields the stored copy was missing.

# %%
stats = repo.upsert([DataRecord(title="lipstick  JUNGLE!", author="candace bushnell",
                                publisher="Hyperion", price="$7.99")])
print(stats)
print(repo.query(title="lipstick")[0])

# %% [markdown]
# Two different books may share an ISBN on a messy listing; both are kept.

# %%
repo.upsert([DataRecord(title="Second Jungle", author="A. Writer", isbn="9780140621846")])
print([r.title for r in repo.query(isbn="9780140621846")])

# %% [markdown]
# Queries are case-insensitive substring matches, conjunctive across fields.

# %%
print([r.title for r in repo.query(title="jungle", author="kipling")])
print(repo.dumps("jsonl").splitlines()[0])

# %% [markdown]
# The crawl metric is the share of answer pages that carried real results.

# %%
print(f"{valid_page_ratio(486, 528):.4f}  {valid_page_ratio(291, 428):.4f}")

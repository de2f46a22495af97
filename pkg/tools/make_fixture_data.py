"""Regenerate the CSV datasets behind the default fixture manifest.

The output is committed; run this only when the datasets need to change:

    python tools/make_fixture_data.py
"""

import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "hiddenweb" / "fixtures" / "data"
COLUMNS = ["ISBN", "Title", "Author", "Published By", "Keywords", "Price"]

# the seed book list, with cells cut short as a narrow results table shows them
SEED_LIST = [
    ("9780309084017", "Information Te", "Committee on", "National Acade", "Research, Innc"),
    ("9780309087041", "Cybersecurity", "Computer Scie", "", "Cyber,security"),
    ("9780309092548", "Deconstructing", "Committee on", "National Acade", "Deconstructing"),
    ("9780321304278", "Rethinking Thii", "Kolata, Gina", "", "Science , Weig"),
    ("9780340734209", "Addison-Wesle", "DePasquale, Pi", "Addison-Wesle", "Java, Referen"),
    ("9780330477246", "operating syste", "P.Galvin", "arihant", "operating syste"),
    ("9780333060650", "Lipstick Jungle", "Rudyard Kiplin", "Parragon Plus", "Jungle"),
    ("9780340337288", "Computer Prog", "Lightfoot, Davi", "", "Computer, Proc"),
    ("9780340639467", "Windows 95 (T", "Oxford Compu", "Teach Yourself", ""),
    ("9780340734209", "Second Jungle", "Bushnell, Cand", "Mills & Boon", "Jungle"),
    ("9780340734216", "The jungle boo", "Franklin W Dix", "Coronet Books", "jungle , rainbo"),
    ("9780345461223", "The Love Affair", "Hunter, Jillian", "Ivy Books", "Love, Affair , L"),
    ("9780349115696", "The Jungle Dur", "Hawkins, Jack", "InfoBooks Ltd", "Jungle, Durami"),
]

# the same books with the cells untruncated, as a bookshop would list them
FULL = [
    ("9780309084017", "Information Technology Research, Innovation, and E-Government",
     "Committee on Computing and Communications Research", "National Academies Press",
     "Research, Innovation, Government"),
    ("9780309087041", "Cybersecurity Today and Tomorrow",
     "Computer Science and Telecommunications Board", "National Academies Press",
     "Cyber,security, Policy"),
    ("9780309092548", "Deconstructing Barriers to Interdisciplinary Research",
     "Committee on Facilitating Interdisciplinary Research", "National Academies Press",
     "Deconstructing, Research"),
    ("9780321304278", "Rethinking Thin", "Kolata, Gina", "Picador", "Science , Weight Loss"),
    ("9780340734209", "Addison-Wesley's Java Backpack Reference Guide", "DePasquale, Peter",
     "Addison-Wesley", "Java, Reference"),
    ("9780330477246", "operating system concepts", "P.Galvin", "arihant", "operating system"),
    ("9780333060650", "Lipstick Jungle", "Rudyard Kipling", "Parragon Plus", "Jungle"),
    ("9780340337288", "Computer Programming in Basic", "Lightfoot, David", "Hodder Education",
     "Computer, Programming"),
    ("9780340639467", "Windows 95 (Teach Yourself)", "Oxford Computer Group", "Teach Yourself",
     "Windows"),
    ("9780340734209", "Second Jungle Book", "Bushnell, Candace", "Mills & Boon", "Jungle"),
    ("9780340734216", "The jungle book", "Franklin W Dixon", "Coronet Books", "jungle , rainbow"),
    ("9780345461223", "The Love Affair", "Hunter, Jillian", "Ivy Books", "Love, Affair , Lady"),
    ("9780349115696", "The Jungle Durango", "Hawkins, Jack", "InfoBooks Ltd", "Jungle, Duramite"),
]

# titles that contain a seed-list title cell, so the crawler can reach them by title
BASES = [row[1] for row in FULL if row[1] != "Rethinking Thin"]
SUFFIXES = [": Second Edition", " (Illustrated)", ": A Study Guide", " Revisited", ", Volume II",
            ": Collected Essays", " for Beginners", " (Abridged)", ": Annotated", " in Practice",
            ": Field Notes", " Companion"]
FIRST = ["Meera", "Arjun", "Kavita", "Rohan", "Ananya", "Vikram", "Sunita", "Farhan", "Leela",
         "Tomas", "Greta", "Ibrahim", "Nadia", "Oskar", "Priya", "Quentin", "Rhea", "Sanjay"]
LAST = ["Kapoor", "Sethi", "Mehra", "Bhatia", "Dixit", "Yadav", "Lindqvist", "Okafor", "Varga",
        "Moreau", "Haddad", "Ferreira", "Novak", "Castillo", "Ishikawa", "Brennan"]
PUBLISHERS = ["Ivy Books", "Coronet Books", "Mills & Boon", "Parragon Plus", "arihant",
              "Teach Yourself", "InfoBooks Ltd", "National Academies Press"]


def _isbn(rng, used):
    while True:
        body = "978" + "".join(str(rng.randrange(10)) for _ in range(9))
        total = sum(int(d) * (1 if i % 2 == 0 else 3) for i, d in enumerate(body))
        isbn = body + str((10 - total % 10) % 10)
        if isbn not in used and not any(isbn == r[0] for r in FULL):
            used.add(isbn)
            return isbn


def _price(rng):
    return f"${rng.randrange(5, 60)}.{rng.choice(['00', '49', '95', '99'])}"


def generate(rng, n, used_isbns, used_titles, authors=None):
    rows = []
    while len(rows) < n:
        base = rng.choice(BASES)
        title = base + rng.choice(SUFFIXES)
        if title in used_titles:
            continue
        used_titles.add(title)
        author = (authors[len(rows) % len(authors)] if authors
                  else f"{rng.choice(FIRST)} {rng.choice(LAST)}")
        keywords = next(r[4] for r in FULL if r[1] == base)
        rows.append((_isbn(rng, used_isbns), title, author, rng.choice(PUBLISHERS), keywords,
                     _price(rng)))
    return rows


def write(name, rows, columns=COLUMNS):
    with open(OUT / name, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(list(r)[:len(columns)])


def main():
    rng = random.Random(20140901)
    OUT.mkdir(parents=True, exist_ok=True)
    used_isbns, used_titles = set(), set(r[1] for r in FULL)

    write("seed_books.csv", SEED_LIST, COLUMNS[:5])

    single = generate(rng, 20, used_isbns, used_titles)
    write("single.csv", single)

    multi = [(*r, "") for r in FULL] + generate(rng, 37, used_isbns, used_titles)
    write("multi.csv", multi)

    # 10 authors, none of them in the seed list; two of them wrote two books each
    names = [f"{f} {l}" for f, l in zip(FIRST[:10], LAST[:10])]
    synonym = generate(rng, 12, used_isbns, used_titles, authors=names)
    write("synonym.csv", synonym)

    select = generate(rng, 10, used_isbns, used_titles)
    select = [(r[0], r[1], r[2], PUBLISHERS[i % 4], r[4], r[5]) for i, r in enumerate(select)]
    write("select.csv", select)

    flaky = generate(rng, 10, used_isbns, used_titles)
    write("flaky.csv", flaky)

    # 20 rows shared with the multi site (a few re-cased, all priced), 30 of its own
    shared = []
    for i, r in enumerate(multi[:5] + multi[20:35]):
        title = r[1].upper() if i % 7 == 3 else r[1]
        shared.append((r[0], title, r[2], r[3], r[4], r[5] or _price(rng)))
    overlap = shared + generate(rng, 30, used_isbns, used_titles)
    write("overlap.csv", overlap)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerates tests/fixtures/mini: 200 work records in three topical
groups, split over a plain and a gzip-compressed file, plus one malformed
line. Output is deterministic."""

import gzip
import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent / "mini"
PREFIX = "https://openalex.org/"

GROUPS = {
    "chem": [("C185592680", "Chemistry", 0), ("C147597530", "Computational chemistry", 1),
             ("C152365726", "Density functional theory", 2), ("C161790260", "Catalysis", 2)],
    "cs": [("C41008148", "Computer science", 0), ("C2522767166", "Data science", 1),
           ("C23123220", "Information retrieval", 2), ("C2778805511", "Citation", 2)],
    "phys": [("C121332964", "Physics", 0), ("C26873012", "Condensed matter physics", 1),
             ("C16577136", "Superconductivity", 2), ("C84114770", "Quantum mechanics", 2)],
}
LEVEL3 = [("C3000001", "Hartree-Fock method", 3), ("C3000002", "Bibliographic coupling", 3),
          ("C3000003", "Cuprate", 3), ("C3000004", "Tight binding", 3)]


def concept(c):
    cid, name, level = c
    return {"id": PREFIX + cid, "wikidata": None, "display_name": name, "level": level,
            "score": 0.5}


def main():
    rng = random.Random(20240129)
    works = []
    names = list(GROUPS)
    for k in range(200):
        wid = f"W{1000 + k}"
        group = rng.choices(names, weights=[4, 3, 3])[0]
        year = rng.randint(2014, 2023)
        pool = GROUPS[group]
        picked = [pool[0]] + rng.sample(pool[1:], rng.randint(1, 2))
        if rng.random() < 0.12:
            other = GROUPS[rng.choice([n for n in names if n != group])]
            picked.append(rng.choice(other))
        if rng.random() < 0.2:
            picked.append(rng.choice(LEVEL3))
        if k % 23 == 5:
            picked = [rng.choice(LEVEL3)]           # no level <= 2 concept
        if k % 31 == 7:
            picked.append(picked[0])               # duplicate assignment
        refs = []
        earlier = [w for w in works if w["_group"] == group]
        for _ in range(rng.randint(0, 6)):
            if earlier and rng.random() < 0.85:
                refs.append(rng.choice(earlier)["id"])
            elif works:
                refs.append(rng.choice(works)["id"])
        if rng.random() < 0.3:
            refs.append(PREFIX + f"W9{rng.randint(100000, 999999)}")  # outside the corpus
        work = {
            "id": PREFIX + wid,
            "doi": None,
            "title": f"Synthetic work {k}",
            "publication_year": None if k % 47 == 11 else year,
            "type": rng.choice(["article", "book-chapter", "dataset", "preprint"]),
            "concepts": [concept(c) for c in picked],
            "referenced_works": refs,
            "_group": group,
        }
        works.append(work)

    OUT.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({k: v for k, v in w.items() if k != "_group"}, ensure_ascii=False)
             for w in works]
    first, second = lines[:120], lines[120:]
    first.insert(60, '{"id": "https://openalex.org/W1", "pub')
    (OUT / "part_000.jsonl").write_text("\n".join(first) + "\n", encoding="utf-8")
    with open(OUT / "part_001.jsonl.gz", "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as gz:
            gz.write(("\n".join(second) + "\n").encode("utf-8"))


if __name__ == "__main__":
    main()

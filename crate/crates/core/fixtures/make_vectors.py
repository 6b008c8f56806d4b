"""Writes vectors_100x50.txt: 100 Persian tokens with 50-d GloVe-format vectors.

Tokens are the distinct words of table4_comments.tsv (normalized as in
count_tokens.py) in first-seen order, padded with a few common review words.
Values come from a seeded PRNG, so the file is reproducible. Running with
--check validates an existing file instead.

Usage: python3 make_vectors.py [--check]
"""
import csv
import math
import random
import sys

from count_tokens import FOLD, dropped, stripped

WORDS, DIM, PATH = 100, 50, "vectors_100x50.txt"
EXTRA = "خوب بد عالی کیفیت ارسال بسته بندی کیفیت مناسب راضی ناراضی ضعیف قوی باتری صفحه دوربین صدا رنگ اندازه سبک سنگین گران ارزان سریع کند پیشنهاد توصیه خرابی گارانتی پشتیبانی".split()


def tokens(text):
    folded = "".join(FOLD.get(c, c) for c in text if not dropped(c)).lower()
    return "".join(" " if stripped(c) else c for c in folded).split()


def vocabulary():
    seen = []
    with open("table4_comments.tsv", encoding="utf-8") as f:
        for r in csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE):
            seen += tokens(r["text"])
    seen += EXTRA
    return list(dict.fromkeys(seen))[:WORDS]


def write():
    rng = random.Random(50)
    with open(PATH, "w", encoding="utf-8") as f:
        for w in vocabulary():
            f.write(w + " " + " ".join(f"{rng.uniform(-1, 1):.6f}" for _ in range(DIM)) + "\n")


def check():
    seen = set()
    with open(PATH, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            parts = line.split()
            assert len(parts) == DIM + 1, f"line {n}: {len(parts)} fields"
            assert all(math.isfinite(float(v)) for v in parts[1:]), f"line {n}: non-finite"
            assert parts[0] not in seen, f"line {n}: duplicate {parts[0]}"
            seen.add(parts[0])
    assert len(seen) == WORDS, len(seen)
    print(f"{PATH}: {len(seen)} tokens x {DIM} finite components")


if __name__ == "__main__":
    if "--check" not in sys.argv:
        write()
    check()

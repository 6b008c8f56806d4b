"""Counts whitespace-delimited tokens in each comment of table4_comments.tsv.

Standalone re-implementation of the normalization rules (no shared code with
the Rust crate): Arabic yeh/kaf folded to Persian forms, diacritics and tatweel
dropped, ZWNJ to space, lowercase, Unicode punctuation (categories P*), ASCII
letters/digits and Arabic-Indic/Persian digits replaced by spaces. No stopwords.

Usage: python3 count_tokens.py > table4_token_counts.tsv
"""
import csv
import sys
import unicodedata

FOLD = {"ي": "ی", "ى": "ی", "ك": "ک", "‌": " "}


def dropped(c):
    return "ً" <= c <= "ٟ" or c in ("ٰ", "ـ")


def stripped(c):
    if unicodedata.category(c).startswith("P"):
        return True
    if c.isascii() and c.isalnum():
        return True
    return "٠" <= c <= "٩" or "۰" <= c <= "۹"


def count(text):
    folded = "".join(FOLD.get(c, c) for c in text if not dropped(c)).lower()
    cleaned = "".join(" " if stripped(c) else c for c in folded)
    return len(cleaned.split())


def main():
    with open("table4_comments.tsv", encoding="utf-8") as f:
        rows = list(csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE))
    out = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    out.writerow(["category", "tokens"])
    for r in rows:
        out.writerow([r["category"], count(r["text"])])


if __name__ == "__main__":
    main()

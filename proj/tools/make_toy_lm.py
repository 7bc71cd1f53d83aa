#!/usr/bin/env python3
# Copyright 2026 The Genex Authors.
# SPDX-License-Identifier: Apache-2.0
"""Builds the toy next-word scorer fixture from a small text corpus.

Contexts of one and two words get smoothed relative frequencies; the empty
context holds unigram frequencies. The vocabulary also covers every word that
can appear in a fixture prompt or subtype phrase.
"""

import argparse
import collections
import json
import pathlib
import re

EOS = "</s>"
PUNCT = ".,;:!?"
IRREGULAR = {"person": "people", "man": "men", "woman": "women", "child": "children",
             "mouse": "mice", "goose": "geese", "foot": "feet", "tooth": "teeth",
             "leaf": "leaves", "calf": "calves", "wolf": "wolves", "fish": "fish"}


def words(text):
    return [w for w in re.findall(r"[^\s.,;:!?]+|[.,;:!?]", text.lower()) if w]


def variants(w):
    if not w.isalpha():
        return {w}
    out = {w, w + "s", w + "es"}
    if w.endswith("y"):
        out.add(w[:-1] + "ies")
    if w.endswith("e"):
        out.add(w[:-1] + "ing")
    out.add(w + "ing")
    if w in IRREGULAR:
        out.add(IRREGULAR[w])
    if w.endswith("s") and len(w) > 3:
        out.add(w[:-1])
    return out


def data_lines(path):
    if not path.exists():
        return []
    lines = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip() if not line.lstrip().startswith("{") else line.strip()
        if line:
            lines.append(line)
    return lines


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="data", type=pathlib.Path)
    ap.add_argument("--out", default="data/fixture/toy_lm.json", type=pathlib.Path)
    ap.add_argument("--epsilon", default=0.02, type=float)
    args = ap.parse_args()
    d = args.data

    corpus = [words(l) + [EOS] for l in data_lines(d / "fixture/lm_corpus.txt")]
    vocab = set(w for s in corpus for w in s)

    for line in data_lines(d / "fixture/generics.jsonl"):
        vocab.update(words(json.loads(line)["text"]))
    for line in data_lines(d / "fixture/raw_generics.txt"):
        vocab.update(words(line))
    for line in data_lines(d / "kb.tsv"):
        cols = line.split("\t")
        for term in cols[:3:2]:
            for w in words(term):
                vocab.update(variants(w))
    for name in ("completions.tsv", "infill.tsv"):
        for line in data_lines(d / "fixture" / name):
            for col in line.split("\t")[:2]:
                for w in words(col):
                    vocab.update(variants(w))
    for line in data_lines(d / "connectives.conf"):
        vocab.update(words(line.split("=", 1)[-1]))
    for line in data_lines(d / "lexicon/verbs.txt"):
        for w in words(line):
            vocab.update(variants(w))
    vocab.update(words("do does not cannot can must is are has have the a an"))
    vocab.discard(EOS)
    vocab = sorted(vocab) + [EOS]

    counts = collections.defaultdict(collections.Counter)
    for sent in corpus:
        for i, w in enumerate(sent):
            counts[""][w] += 1
            if i >= 1:
                counts[sent[i - 1]][w] += 1
            if i >= 2:
                counts[sent[i - 2] + " " + sent[i - 1]][w] += 1

    table = {}
    for ctx, c in sorted(counts.items()):
        total = sum(c.values())
        table[ctx] = {w: round((1 - args.epsilon) * n / total, 6) for w, n in sorted(c.items())}

    out = {"format": "genex-toy-lm", "version": 1, "vocabulary": vocab, "eos": EOS,
           "context": "suffix", "table": table}
    args.out.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    print(f"{len(vocab)} symbols, {len(table)} contexts -> {args.out}")


if __name__ == "__main__":
    main()

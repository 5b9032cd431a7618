#!/usr/bin/env python3
"""Generate the bundled fixture corpus (train/test split, ~100k tokens).

Word types follow a Zipfian rank distribution; frequent ranks receive shorter
forms (with noise). Each type has a few preferred successors so contextual
surprisal differs from unigram surprisal. A small fraction of tokens carries
punctuation, capitals or digits so that the filtering protocols disagree.
"""
import math
import random
import sys
from pathlib import Path

SEED = 20231206
N_TYPES = 4000
TRAIN_TOKENS = 80_000
TEST_TOKENS = 20_000
LETTERS = "etaoinshrdlcumwfgypbvkjxqz"
LETTER_W = [12.7, 9.1, 8.2, 7.5, 7.0, 6.7, 6.3, 6.1, 6.0, 4.3, 4.0, 2.8, 2.8,
            2.4, 2.4, 2.2, 2.0, 2.0, 1.9, 1.5, 1.0, 0.8, 0.15, 0.15, 0.1, 0.07]


def make_vocab(rng):
    seen, vocab = set(), []
    for rank in range(1, N_TYPES + 1):
        base = 1.0 + 0.9 * math.log2(rank + 1)
        while True:
            length = max(1, int(round(rng.gauss(base, 1.3))))
            form = "".join(rng.choices(LETTERS, LETTER_W, k=length))
            if form not in seen:
                seen.add(form)
                vocab.append(form)
                break
    return vocab


def decorate(rng, form):
    r = rng.random()
    if r < 0.06:
        return form + rng.choice([",", ".", ";", ":", ")"])
    if r < 0.07:
        return "(" + form
    if r < 0.085:
        return form[0].upper() + form[1:]
    if r < 0.092:
        return str(rng.randint(1, 2024))
    if r < 0.096:
        return form + "-" + rng.choice(["like", "ish", "ward"])
    if r < 0.099:
        return form + rng.choice(["é", "ß", "ø"])
    return form


def generate(rng, vocab, weights, successors, n_tokens):
    lines, line, prev = [], [], None
    target = rng.randint(8, 24)
    for _ in range(n_tokens):
        if prev is not None and rng.random() < 0.45:
            idx = rng.choice(successors[prev])
        else:
            idx = rng.choices(range(len(vocab)), weights)[0]
        line.append(decorate(rng, vocab[idx]))
        prev = idx
        if len(line) >= target:
            lines.append(" ".join(line))
            line, target = [], rng.randint(8, 24)
    if line:
        lines.append(" ".join(line))
    return "\n".join(lines) + "\n"


def main(out_dir):
    rng = random.Random(SEED)
    vocab = make_vocab(rng)
    weights = [1.0 / (r ** 1.05) for r in range(1, N_TYPES + 1)]
    successors = [
        [min(N_TYPES - 1, int(rng.paretovariate(0.8))) for _ in range(4)]
        for _ in range(N_TYPES)
    ]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "train.txt").write_text(generate(rng, vocab, weights, successors, TRAIN_TOKENS), encoding="utf-8")
    (out / "test.txt").write_text(generate(rng, vocab, weights, successors, TEST_TOKENS), encoding="utf-8")
    (out / "alphabet_latin.txt").write_text("abcdefghijklmnopqrstuvwxyz\n", encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")

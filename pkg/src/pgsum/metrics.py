"""From-scratch ROUGE-2, ROUGE-L, BLEU up to bigrams, and lead baselines."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .corpus import NEWS, OPINION, SENTENCE_END

# lead-token budgets matched to typical human summary lengths per domain
FIRST_K = {NEWS: 22, OPINION: 15}


@dataclass
class Score:
    rouge2: float
    rougeL: float
    bleu: float
    avg_len: float


def _bigrams(tokens: list[str]) -> Counter:
    return Counter(zip(tokens, tokens[1:]))


def rouge_2(candidate: list[str], reference: list[str]) -> float:
    """Clipped bigram recall against the reference (multiset counting)."""
    ref_bigrams = _bigrams(reference)
    total = sum(ref_bigrams.values())
    if total == 0:
        return 0.0
    overlap = sum((_bigrams(candidate) & ref_bigrams).values())
    return overlap / total


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence by dynamic programming."""
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str],
            mode: str = "recall") -> float:
    """LCS-based score; recall by default, precision and F1 behind the flag."""
    if not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    recall = lcs / len(reference)
    if mode == "recall":
        return recall
    precision = lcs / len(candidate) if candidate else 0.0
    if mode == "precision":
        return precision
    if mode == "f1":
        if recall + precision == 0.0:
            return 0.0
        return 2 * recall * precision / (recall + precision)
    raise ValueError(f"rouge_l: unknown mode {mode!r}")


def bleu_2(candidate: list[str], reference: list[str]) -> float:
    """BLEU with unigram and bigram precisions and a brevity penalty.

    Smoothing: a zero bigram-match count with nonzero unigram overlap is
    replaced by 1 / (2 * len(candidate)); zero unigram overlap scores 0.
    A single-token candidate has no bigrams and is scored on unigram
    precision alone, so identity inputs always score 1.
    """
    if not candidate or not reference:
        return 0.0
    uni_hits = sum((Counter(candidate) & Counter(reference)).values())
    if uni_hits == 0:
        return 0.0
    p1 = uni_hits / len(candidate)
    bp = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    if len(candidate) == 1:
        return bp * p1
    bi_hits = sum((_bigrams(candidate) & _bigrams(reference)).values())
    n_bigrams = len(candidate) - 1
    if bi_hits == 0:
        p2 = (1.0 / (2.0 * len(candidate))) / n_bigrams
    else:
        p2 = bi_hits / n_bigrams
    return bp * math.exp(0.5 * (math.log(p1) + math.log(p2)))


def evaluate_corpus(system_outputs: list[list[str]],
                    references: list[list[str]]) -> Score:
    """Macro-averaged per-pair scores plus mean output length."""
    if len(system_outputs) != len(references):
        raise ValueError(
            f"evaluate_corpus: {len(system_outputs)} outputs vs "
            f"{len(references)} references")
    if not system_outputs:
        raise ValueError("evaluate_corpus: no pairs")
    n = len(system_outputs)
    return Score(
        rouge2=sum(rouge_2(c, r) for c, r in zip(system_outputs, references)) / n,
        rougeL=sum(rouge_l(c, r) for c, r in zip(system_outputs, references)) / n,
        bleu=sum(bleu_2(c, r) for c, r in zip(system_outputs, references)) / n,
        avg_len=sum(len(c) for c in system_outputs) / n)


def baseline_first_sentence(text_tokens: list[str]) -> list[str]:
    """First sentence of the text (whole text if no terminator)."""
    if not text_tokens:
        raise ValueError("baseline_first_sentence: empty document")
    for i, tok in enumerate(text_tokens):
        if tok in SENTENCE_END:
            return text_tokens[:i + 1]
    return list(text_tokens)


def baseline_first_k(text_tokens: list[str], domain: str | None = None,
                     k: int | None = None) -> list[str]:
    """First k tokens; k is 22 for news and 15 for opinion."""
    if not text_tokens:
        raise ValueError("baseline_first_k: empty document")
    if k is None:
        if domain not in FIRST_K:
            raise ValueError(
                f"baseline_first_k: no default k for domain {domain!r}; pass k")
        k = FIRST_K[domain]
    return text_tokens[:k]

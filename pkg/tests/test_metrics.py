import math
import random
from functools import lru_cache

import pytest

from pgsum.metrics import (baseline_first_k, baseline_first_sentence, bleu_2,
                           evaluate_corpus, lcs_length, rouge_2, rouge_l)


def lcs_oracle(a, b):
    """Recursive-with-memo LCS, independent of the iterative DP in metrics."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def clipped_ngram_matches(candidate, reference, n):
    """Greedy one-to-one matching of candidate n-grams against reference
    n-grams; equivalent to clipped multiset counting by construction."""
    ref = [tuple(reference[i:i + n]) for i in range(len(reference) - n + 1)]
    hits = 0
    for i in range(len(candidate) - n + 1):
        gram = tuple(candidate[i:i + n])
        if gram in ref:
            ref.remove(gram)
            hits += 1
    return hits


def bleu_oracle(candidate, reference):
    if not candidate or not reference:
        return 0.0
    u = clipped_ngram_matches(candidate, reference, 1)
    if u == 0:
        return 0.0
    p1 = u / len(candidate)
    bp = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    if len(candidate) == 1:
        return bp * p1
    b = clipped_ngram_matches(candidate, reference, 2)
    p2 = (b if b else 1.0 / (2.0 * len(candidate))) / (len(candidate) - 1)
    return bp * math.exp(0.5 * (math.log(p1) + math.log(p2)))


class TestRouge2:
    def test_identity(self):
        assert rouge_2(list("abcd"), list("abcd")) == 1.0

    def test_candidate_covers_reference(self):
        cand = "the cat sat on mat".split()
        ref = "the cat sat".split()
        assert rouge_2(cand, ref) == 1.0

    def test_disjoint(self):
        assert rouge_2(["a", "b"], ["c", "d"]) == 0.0

    def test_short_reference_scores_zero(self):
        assert rouge_2(["a", "b"], ["a"]) == 0.0

    def test_multiset_clipping(self):
        # reference has (a,a) twice; candidate supplies it once
        assert rouge_2(["a", "a"], ["a", "a", "a"]) == 0.5


class TestRougeL:
    def test_identity(self):
        assert rouge_l(list("abc"), list("abc")) == 1.0

    def test_transposition(self):
        assert rouge_l("a c b d".split(), "a b c d".split()) == 0.75

    def test_empty_candidate(self):
        assert rouge_l([], ["a", "b"]) == 0.0

    def test_modes(self):
        cand, ref = ["a", "b", "x"], ["a", "b"]
        assert rouge_l(cand, ref, mode="recall") == 1.0
        assert rouge_l(cand, ref, mode="precision") == pytest.approx(2 / 3)
        assert rouge_l(cand, ref, mode="f1") == pytest.approx(0.8)

    def test_agrees_with_oracle_on_random_sequences(self):
        rng = random.Random(42)
        alphabet = list("abcde")
        for _ in range(500):
            a = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(1, 8))]
            assert lcs_length(a, b) == lcs_oracle(a, b)
            assert rouge_l(a, b) == lcs_oracle(a, b) / len(b)


class TestBleu2:
    def test_spec_fixture(self):
        got = bleu_2("the cat".split(), "the cat sat".split())
        assert got == pytest.approx(math.exp(1 - 3 / 2), abs=1e-9)

    def test_identity(self):
        assert bleu_2(list("abc"), list("abc")) == pytest.approx(1.0)

    def test_zero_unigram_overlap(self):
        assert bleu_2(["a", "b"], ["c", "d"]) == 0.0

    def test_agrees_with_oracle_on_random_sequences(self):
        rng = random.Random(7)
        alphabet = list("abcd")
        for _ in range(500):
            a = [rng.choice(alphabet) for _ in range(rng.randint(1, 7))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(1, 7))]
            assert bleu_2(a, b) == pytest.approx(bleu_oracle(a, b), abs=1e-12)

    def test_in_unit_interval(self):
        rng = random.Random(9)
        for _ in range(200):
            a = [rng.choice("ab") for _ in range(rng.randint(1, 6))]
            b = [rng.choice("ab") for _ in range(rng.randint(1, 6))]
            assert 0.0 <= bleu_2(a, b) <= 1.0


class TestEvaluateCorpus:
    def test_perfect(self):
        refs = ["the cat sat".split(), "a b c d".split()]
        score = evaluate_corpus(refs, refs)
        assert score.rouge2 == score.rougeL == score.bleu == 1.0
        assert score.avg_len == 3.5

    def test_mean_of_extremes(self):
        outs = ["a b c".split(), "x y".split()]
        refs = ["a b c".split(), "p q".split()]
        assert evaluate_corpus(outs, refs).rougeL == pytest.approx(0.5)

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            evaluate_corpus([["a"]], [["a"], ["b"]])

    def test_fixture_corpus_matches_per_pair_oracle(self):
        rng = random.Random(3)
        pairs = []
        for _ in range(5):
            out = [rng.choice("abcd") for _ in range(rng.randint(1, 6))]
            ref = [rng.choice("abcd") for _ in range(rng.randint(2, 6))]
            pairs.append((out, ref))
        outs, refs = zip(*pairs)
        score = evaluate_corpus(list(outs), list(refs))
        assert score.rouge2 == pytest.approx(
            sum(rouge_2(o, r) for o, r in pairs) / 5, abs=1e-9)
        assert score.bleu == pytest.approx(
            sum(bleu_2(o, r) for o, r in pairs) / 5, abs=1e-9)


class TestBaselines:
    def test_first_sentence(self):
        toks = "the cat sat . it left .".split()
        assert baseline_first_sentence(toks) == "the cat sat .".split()

    def test_no_terminator_returns_full_text(self):
        assert baseline_first_sentence(["a", "b"]) == ["a", "b"]

    def test_terminator_first(self):
        assert baseline_first_sentence([".", "a"]) == ["."]

    def test_first_k_news(self):
        toks = [str(i) for i in range(100)]
        assert baseline_first_k(toks, domain="news") == toks[:22]

    def test_first_k_opinion_truncation(self):
        toks = [str(i) for i in range(10)]
        assert baseline_first_k(toks, domain="opinion") == toks

    def test_first_k_opinion(self):
        toks = [str(i) for i in range(20)]
        assert baseline_first_k(toks, domain="opinion") == toks[:15]

    def test_unknown_domain_needs_explicit_k(self):
        with pytest.raises(ValueError):
            baseline_first_k(["a"], domain="other")
        assert baseline_first_k(["a", "b", "c"], domain="other", k=2) == ["a", "b"]

import json

import pytest

from pgsum import corpus
from pgsum.corpus import (Document, SplitSpec, Vocabulary, build_extract_pairs,
                          build_vocab, filter_pairs, first_sentence,
                          generate_synthetic_corpus, ingest,
                          load_subjectivity_lexicon, serialize, split, tokenize)


def make_doc(doc_id, text, abstract, domain="news"):
    return Document(id=doc_id, domain=domain, section="",
                    text_tokens=tokenize(text), abstract_tokens=tokenize(abstract))


def test_tokenize_lowercases_and_detaches_punctuation():
    assert tokenize("The Cat, sat!") == ["the", "cat", ",", "sat", "!"]


def test_tokenize_idempotent_on_own_output():
    toks = tokenize("Hello, world... it's fine.")
    assert tokenize(" ".join(toks)) == toks


class TestIngest:
    def write_lines(self, tmp_path, lines):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_well_formed(self, tmp_path):
        lines = [json.dumps({"id": f"d{i}", "domain": "news", "section": "s",
                             "text": "Some Text here.", "abstract": "An abstract."})
                 for i in range(3)]
        docs = ingest(self.write_lines(tmp_path, lines))
        assert len(docs) == 3
        assert docs[0].text_tokens == ["some", "text", "here", "."]

    def test_missing_field_skipped(self, tmp_path, caplog):
        lines = [json.dumps({"id": "a", "domain": "news", "section": "",
                             "text": "t", "abstract": "x"}),
                 json.dumps({"id": "b", "domain": "news", "section": "", "text": "t"})]
        with caplog.at_level("WARNING"):
            docs = ingest(self.write_lines(tmp_path, lines))
        assert [d.id for d in docs] == ["a"]
        assert "skipped" in caplog.text

    def test_mixed_case_lowercased(self, tmp_path):
        lines = [json.dumps({"id": "a", "domain": "opinion", "section": "",
                             "text": "UPPER Case", "abstract": "MiXeD"})]
        (doc,) = ingest(self.write_lines(tmp_path, lines))
        assert doc.text_tokens == ["upper", "case"]
        assert doc.abstract_tokens == ["mixed"]

    def test_unreadable_file_fatal(self, tmp_path):
        with pytest.raises(OSError):
            ingest(tmp_path / "missing.jsonl")

    def test_round_trip(self, tmp_path):
        docs = generate_synthetic_corpus(4, seed=5)
        path = tmp_path / "out.jsonl"
        serialize(docs, path)
        assert ingest(path) == docs


class TestFilterPairs:
    def test_boundary_kept(self):
        doc = make_doc("a", " ".join(["w"] * 16), " ".join(["w"] * 11))
        assert filter_pairs([doc]) == [doc]

    def test_boundary_dropped(self):
        short_text = make_doc("a", " ".join(["w"] * 15), " ".join(["w"] * 11))
        short_abs = make_doc("b", " ".join(["w"] * 16), " ".join(["w"] * 10))
        assert filter_pairs([short_text, short_abs]) == []

    def test_empty(self):
        assert filter_pairs([]) == []

    def test_idempotent(self):
        docs = generate_synthetic_corpus(10, seed=0)
        once = filter_pairs(docs)
        assert filter_pairs(once) == once


class TestBuildVocab:
    def test_hand_count(self):
        doc = Document(id="d", domain="news", section="",
                       text_tokens=["a", "a", "b"], abstract_tokens=[])
        vocab = build_vocab([doc], max_size=6)
        assert vocab.words[4:] == ["a", "b"]
        assert vocab.id_of("a") == 4 and vocab.id_of("b") == 5

    def test_size_cap(self):
        doc = Document(id="d", domain="news", section="",
                       text_tokens=["a", "a", "b"], abstract_tokens=[])
        vocab = build_vocab([doc], max_size=5)
        assert vocab.words[4:] == ["a"]
        assert vocab.id_of("b") == corpus.UNK_ID

    def test_lexicographic_tie_break(self):
        doc = Document(id="d", domain="news", section="",
                       text_tokens=["z", "m", "a"], abstract_tokens=[])
        vocab = build_vocab([doc], max_size=6)
        assert vocab.words[4:] == ["a", "m"]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([], max_size=10)

    def test_too_small_rejected(self):
        doc = make_doc("a", "x", "y")
        with pytest.raises(ValueError):
            build_vocab([doc], max_size=4)

    def test_stable_across_runs(self):
        docs = generate_synthetic_corpus(10, seed=3)
        assert build_vocab(docs, 100).words == build_vocab(docs, 100).words

    def test_save_load_round_trip(self, tmp_path):
        vocab = build_vocab(generate_synthetic_corpus(3, seed=1), 50)
        vocab.save(tmp_path / "vocab.txt")
        assert Vocabulary.load(tmp_path / "vocab.txt").words == vocab.words


class TestSplit:
    def test_paper_ratios(self):
        docs = [make_doc(str(i), "t", "a") for i in range(100)]
        tr, va, te = split(docs, SplitSpec(), seed=0)
        assert (len(tr), len(va), len(te)) == (75, 15, 10)

    def test_deterministic(self):
        docs = [make_doc(str(i), "t", "a") for i in range(37)]
        assert split(docs, SplitSpec(), seed=5) == split(docs, SplitSpec(), seed=5)

    def test_empty(self):
        assert split([], SplitSpec(), seed=0) == ([], [], [])

    def test_partition(self):
        docs = [make_doc(str(i), "t", "a") for i in range(53)]
        tr, va, te = split(docs, SplitSpec(), seed=2)
        ids = [d.id for part in (tr, va, te) for d in part]
        assert sorted(ids) == sorted(d.id for d in docs)
        assert len(set(ids)) == len(ids)

    def test_remainder_goes_to_train(self):
        docs = [make_doc(str(i), "t", "a") for i in range(7)]
        tr, va, te = split(docs, SplitSpec(), seed=0)
        assert (len(tr), len(va), len(te)) == (7 - 1 - 0, 1, 0)

    def test_bad_fractions_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(0.5, 0.2, 0.2)


class TestExtractPairs:
    def test_extractive(self):
        pairs, frac = build_extract_pairs(
            [{"lead": "the cat sat . it left .", "description": "the cat sat ."}])
        assert pairs[0].is_extractive and frac == 1.0

    def test_not_extractive(self):
        pairs, _ = build_extract_pairs(
            [{"lead": "the cat sat . it left .", "description": "a cat sat ."}])
        assert not pairs[0].is_extractive

    def test_fraction(self):
        recs = [{"lead": "a b . c .", "description": "a b ."},
                {"lead": "a b . c .", "description": "a b ."},
                {"lead": "a b . c .", "description": "x ."}]
        _, frac = build_extract_pairs(recs)
        assert frac == pytest.approx(2 / 3)

    def test_empty_record_dropped(self):
        pairs, _ = build_extract_pairs([{"lead": "", "description": "x"},
                                        {"lead": "a .", "description": "a ."}])
        assert len(pairs) == 1

    def test_first_sentence_heuristic(self):
        assert first_sentence("a b ! c".split()) == ["a", "b", "!"]
        assert first_sentence(["a", "b"]) == ["a", "b"]


class TestSyntheticCorpus:
    def test_deterministic_counts(self):
        docs = generate_synthetic_corpus(10, seed=11)
        assert len(docs) == 20
        assert docs == generate_synthetic_corpus(10, seed=11)

    def test_all_survive_length_filter(self):
        docs = generate_synthetic_corpus(20, seed=1)
        assert filter_pairs(docs) == docs

    def test_news_reuse_rate(self):
        from pgsum.analysis import reuse_rate
        docs = [d for d in generate_synthetic_corpus(30, seed=2)
                if d.domain == corpus.NEWS]
        assert reuse_rate(docs) >= 0.80

    def test_opinion_reuse_rate_below_news(self):
        from pgsum.analysis import reuse_rate
        docs = generate_synthetic_corpus(30, seed=2)
        opinion = [d for d in docs if d.domain == corpus.OPINION]
        assert reuse_rate(opinion) <= 0.76

    def test_opinion_review_frame(self):
        docs = generate_synthetic_corpus(15, seed=4)
        for doc in docs:
            if doc.domain == corpus.OPINION:
                assert doc.abstract_tokens[1] == "reviews"

    def test_annotations_aligned(self):
        for doc in generate_synthetic_corpus(5, seed=9):
            assert len(doc.annotations.text) == len(doc.text_tokens)
            assert len(doc.annotations.abstract) == len(doc.abstract_tokens)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            generate_synthetic_corpus(0, seed=0)


def test_subjectivity_lexicon_round_trip(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("great positive\nawful negative\n")
    assert load_subjectivity_lexicon(path) == {"great": "positive",
                                               "awful": "negative"}
    bad = tmp_path / "bad.txt"
    bad.write_text("word maybe\n")
    with pytest.raises(ValueError):
        load_subjectivity_lexicon(bad)

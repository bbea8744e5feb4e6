"""Corpus ingestion, filtering, vocabulary, splitting, and synthetic data.

Corpus files are JSON Lines, one document per line:

    {"id": str, "domain": "news"|"opinion"|"other", "section": str,
     "text": str, "abstract": str,
     "annotations": {"text": [[pos, ne, subj], ...],
                     "abstract": [[pos, ne, subj], ...]}}   # optional

Extract-pair files are JSON Lines: {"lead": str, "description": str}.
"""
from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

NEWS = "news"
OPINION = "opinion"
OTHER = "other"
DOMAINS = (NEWS, OPINION, OTHER)

PAD, UNK, START, STOP = "<pad>", "<unk>", "<s>", "</s>"
RESERVED = (PAD, UNK, START, STOP)
PAD_ID, UNK_ID, START_ID, STOP_ID = 0, 1, 2, 3

SENTENCE_END = {".", "!", "?"}

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace with punctuation detached.

    Idempotent on its own output, so serialize -> ingest round-trips.
    """
    return _TOKEN_RE.findall(text.lower())


# annotation record per token: (pos tag, named-entity class, subjectivity)
Annotation = tuple[str, str, str]

NE_CLASSES = ("PERSON", "ORGANIZATION", "LOCATION", "OTHER", "NONE")
SUBJ_CLASSES = ("positive", "negative", "none")


@dataclass
class DocAnnotations:
    text: list[Annotation]
    abstract: list[Annotation]


@dataclass
class Document:
    id: str
    domain: str
    section: str
    text_tokens: list[str]
    abstract_tokens: list[str]
    annotations: DocAnnotations | None = None


@dataclass
class ExtractPair:
    lead_tokens: list[str]
    description_tokens: list[str]
    is_extractive: bool


@dataclass
class SplitSpec:
    train_frac: float = 0.75
    valid_frac: float = 0.15
    test_frac: float = 0.10

    def __post_init__(self):
        total = self.train_frac + self.valid_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1")


class Vocabulary:
    """Closed word list with reserved tokens at ids 0-3."""

    def __init__(self, words: list[str]):
        if list(words[:4]) != list(RESERVED):
            raise ValueError("vocabulary must start with the reserved tokens")
        self.words = list(words)
        self._ids = {w: i for i, w in enumerate(self.words)}
        if len(self._ids) != len(self.words):
            raise ValueError("vocabulary contains duplicate words")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def id_of(self, word: str) -> int:
        return self._ids.get(word, UNK_ID)

    def word_of(self, idx: int) -> str:
        return self.words[idx]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for w in self.words:
                fh.write(w + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def _parse_annotations(raw, n_text: int, n_abstract: int) -> DocAnnotations:
    text = [tuple(a) for a in raw["text"]]
    abstract = [tuple(a) for a in raw["abstract"]]
    if len(text) != n_text or len(abstract) != n_abstract:
        raise ValueError("annotations do not align with tokens")
    return DocAnnotations(text=text, abstract=abstract)


def ingest(path) -> list[Document]:
    """Read a JSONL corpus file; malformed lines are skipped with a warning."""
    docs: list[Document] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                doc_id = raw["id"]
                domain = raw["domain"]
                if domain not in DOMAINS:
                    raise ValueError(f"unknown domain {domain!r}")
                text_tokens = tokenize(raw["text"])
                abstract_tokens = tokenize(raw["abstract"])
                annotations = None
                if raw.get("annotations") is not None:
                    annotations = _parse_annotations(
                        raw["annotations"], len(text_tokens), len(abstract_tokens))
                docs.append(Document(
                    id=doc_id, domain=domain, section=raw.get("section", ""),
                    text_tokens=text_tokens, abstract_tokens=abstract_tokens,
                    annotations=annotations))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                skipped += 1
                log.warning("%s line %d: skipped malformed document (%s)",
                            path, lineno, exc)
    if skipped:
        log.warning("%s: skipped %d malformed line(s)", path, skipped)
    return docs


def serialize(docs: list[Document], path) -> None:
    """Write documents as JSONL; inverse of ingest for tokenized text."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            raw = {
                "id": doc.id,
                "domain": doc.domain,
                "section": doc.section,
                "text": " ".join(doc.text_tokens),
                "abstract": " ".join(doc.abstract_tokens),
            }
            if doc.annotations is not None:
                raw["annotations"] = {
                    "text": [list(a) for a in doc.annotations.text],
                    "abstract": [list(a) for a in doc.annotations.abstract],
                }
            fh.write(json.dumps(raw) + "\n")


def filter_pairs(docs: list[Document]) -> list[Document]:
    """Keep documents with text longer than 15 tokens and abstract longer than 10."""
    return [d for d in docs
            if len(d.text_tokens) > 15 and len(d.abstract_tokens) > 10]


def build_vocab(docs: list[Document], max_size: int) -> Vocabulary:
    """Most frequent words over text and abstract tokens, ties lexicographic."""
    if not docs:
        raise ValueError("build_vocab: no documents")
    if max_size <= len(RESERVED):
        raise ValueError(f"build_vocab: max_size must exceed {len(RESERVED)}")
    counts: dict[str, int] = {}
    for doc in docs:
        for tok in doc.text_tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok in doc.abstract_tokens:
            counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [w for w, _ in ranked[:max_size - len(RESERVED)]]
    return Vocabulary(list(RESERVED) + keep)


def split(docs: list[Document], spec: SplitSpec, seed: int):
    """Deterministic disjoint train/valid/test partition.

    Valid and test get floor(frac * N) documents; the remainder goes to train.
    """
    n = len(docs)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_valid = int(spec.valid_frac * n)
    n_test = int(spec.test_frac * n)
    n_train = n - n_valid - n_test
    train = [docs[i] for i in order[:n_train]]
    valid = [docs[i] for i in order[n_train:n_train + n_valid]]
    test = [docs[i] for i in order[n_train + n_valid:]]
    return train, valid, test


def first_sentence(tokens: list[str]) -> list[str]:
    """Tokens up to and including the first sentence terminator."""
    for i, tok in enumerate(tokens):
        if tok in SENTENCE_END:
            return tokens[:i + 1]
    return list(tokens)


def build_extract_pairs(records) -> tuple[list[ExtractPair], float]:
    """Pair leads with descriptions and measure the extractive fraction.

    A pair is extractive when the tokenized description equals the first
    sentence of the tokenized lead.  Records with an empty lead or
    description are dropped with a warning.
    """
    pairs: list[ExtractPair] = []
    for rec in records:
        lead = tokenize(rec["lead"]) if isinstance(rec["lead"], str) else list(rec["lead"])
        desc = (tokenize(rec["description"]) if isinstance(rec["description"], str)
                else list(rec["description"]))
        if not lead or not desc:
            log.warning("dropping extract record with empty lead or description")
            continue
        pairs.append(ExtractPair(
            lead_tokens=lead, description_tokens=desc,
            is_extractive=(desc == first_sentence(lead))))
    fraction = (sum(p.is_extractive for p in pairs) / len(pairs)) if pairs else 0.0
    return pairs, fraction


def ingest_extract_pairs(path) -> tuple[list[ExtractPair], float]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                records.append({"lead": raw["lead"], "description": raw["description"]})
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                log.warning("%s line %d: skipped malformed extract pair (%s)",
                            path, lineno, exc)
    return build_extract_pairs(records)


def extract_pairs_from_documents(docs: list[Document]) -> list[ExtractPair]:
    """Lead-paragraph/description pairs built from documents.

    The lead is the full text; the description is its first sentence, so
    every pair is extractive by construction.
    """
    return [ExtractPair(lead_tokens=list(d.text_tokens),
                        description_tokens=first_sentence(d.text_tokens),
                        is_extractive=True)
            for d in docs if d.text_tokens]


# ---------------------------------------------------------------------------
# Small built-in lexicons, shared by the synthetic generator and the
# fallback annotator.  These stand in for external taggers; real corpora
# should supply annotations in the input files.

PERSON_NAMES = [
    "alvarez", "baker", "chen", "dubois", "ellis", "fischer", "garcia",
    "hansen", "ito", "jones", "kim", "larsen", "moreau", "novak", "okafor",
    "patel", "quinn", "rossi", "tanaka", "weber",
]
ORGANIZATIONS = ["council", "committee", "ministry", "board", "league", "company"]
LOCATIONS = ["arena", "gallery", "hall", "stadium", "theater", "museum",
             "plaza", "harbor", "garden", "library"]
TOPICS = ["concert", "exhibit", "ballet", "opera", "festival", "match",
          "tournament", "election", "budget", "merger", "trial", "storm",
          "strike", "summit", "launch", "premiere"]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
PLAIN_ADJECTIVES = ["new", "bold", "quiet", "lively", "grand", "modest"]
OPINION_ADJECTIVES = ["impressive", "strange", "uneven", "bland"]
REVIEW_WORDS = ["memorable", "dazzling", "tedious", "charming", "hollow", "dull"]
VERBS = ["ended", "said", "drew", "led", "thanked", "expect", "opened",
         "attended", "called", "stayed", "reviews", "finds"]
NOUNS_EXTRA = ["crowds", "effort", "supporters", "organizers", "year",
               "audience", "night"]
ADVERBS = ["late"]

DEFAULT_SUBJECTIVITY = {
    "impressive": "positive", "memorable": "positive", "dazzling": "positive",
    "charming": "positive", "lively": "positive", "grand": "positive",
    "strange": "negative", "uneven": "negative", "bland": "negative",
    "tedious": "negative", "hollow": "negative", "dull": "negative",
}

_NOUN_WORDS = set(PERSON_NAMES) | set(ORGANIZATIONS) | set(LOCATIONS) | \
    set(TOPICS) | set(DAYS) | set(NOUNS_EXTRA)
_ADJ_WORDS = set(PLAIN_ADJECTIVES) | set(OPINION_ADJECTIVES) | set(REVIEW_WORDS)


def load_subjectivity_lexicon(path) -> dict[str, str]:
    """Plain text lexicon: one `word positive|negative` entry per line."""
    lexicon: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2 or parts[1] not in ("positive", "negative"):
                raise ValueError(f"{path} line {lineno}: malformed lexicon entry")
            lexicon[parts[0].lower()] = parts[1]
    return lexicon


def annotate_token(word: str, subjectivity: dict[str, str] | None = None) -> Annotation:
    """Rule-based fallback annotation for one token."""
    subj_lex = DEFAULT_SUBJECTIVITY if subjectivity is None else subjectivity
    if not re.search(r"\w", word):
        pos = "punct"
    elif word in VERBS:
        pos = "verb"
    elif word in _ADJ_WORDS:
        pos = "adj"
    elif word in ADVERBS:
        pos = "adv"
    elif word in _NOUN_WORDS:
        pos = "noun"
    else:
        pos = "other"
    if word in PERSON_NAMES:
        ne = "PERSON"
    elif word in ORGANIZATIONS:
        ne = "ORGANIZATION"
    elif word in LOCATIONS:
        ne = "LOCATION"
    else:
        ne = "NONE"
    subj = subj_lex.get(word, "none")
    return (pos, ne, subj)


def annotate(doc: Document, subjectivity: dict[str, str] | None = None) -> Document:
    """Attach fallback annotations to a document (no-op if already present)."""
    if doc.annotations is not None:
        return doc
    doc.annotations = DocAnnotations(
        text=[annotate_token(t, subjectivity) for t in doc.text_tokens],
        abstract=[annotate_token(t, subjectivity) for t in doc.abstract_tokens])
    return doc


def _news_doc(i: int, rng: random.Random) -> Document:
    topic = rng.choice(TOPICS)
    place = rng.choice(LOCATIONS)
    day = rng.choice(DAYS)
    org = rng.choice(ORGANIZATIONS)
    name = rng.choice(PERSON_NAMES)
    text = (f"the {topic} at the {place} ended on {day} . "
            f"the {org} said the {topic} drew large crowds . "
            f"{name} led the effort and thanked supporters . "
            f"organizers expect another {topic} next year .")
    abstract = (f"the {org} said the {topic} at the {place} drew large crowds .")
    doc = Document(id=f"news-{i:04d}", domain=NEWS,
                   section=rng.choice(["sports", "business", "world"]),
                   text_tokens=tokenize(text), abstract_tokens=tokenize(abstract))
    return annotate(doc)


def _opinion_doc(i: int, rng: random.Random) -> Document:
    adj = rng.choice(PLAIN_ADJECTIVES)
    adj2 = rng.choice(OPINION_ADJECTIVES)
    topic = rng.choice(TOPICS)
    place = rng.choice(LOCATIONS)
    day = rng.choice(DAYS)
    name = rng.choice(PERSON_NAMES)
    verdict = rng.choice(REVIEW_WORDS)
    text = (f"the {adj} {topic} opened at the {place} on {day} . "
            f"{name} attended and called it {adj2} . "
            f"the audience stayed late into the night .")
    abstract = (f"{name} reviews the {adj} {topic} at the {place} ; "
                f"finds it {verdict} .")
    doc = Document(id=f"opinion-{i:04d}", domain=OPINION,
                   section=rng.choice(["arts", "books"]),
                   text_tokens=tokenize(text), abstract_tokens=tokenize(abstract))
    return annotate(doc)


def generate_synthetic_corpus(n_per_domain: int, seed: int) -> list[Document]:
    """Two-domain synthetic corpus with measurably different abstract styles.

    News abstracts reuse all of their tokens from the input text; opinion
    abstracts follow a "<name> reviews ..." frame and introduce words that
    never occur in the input, so their reuse rate stays below news.
    """
    if n_per_domain < 1:
        raise ValueError("n_per_domain must be at least 1")
    rng = random.Random(seed)
    docs = [_news_doc(i, rng) for i in range(n_per_domain)]
    docs += [_opinion_doc(i, rng) for i in range(n_per_domain)]
    return docs

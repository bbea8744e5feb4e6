"""Transfer analyses: corpus characterization, gold-token breakdown,
argmax-attention categorization, and the summary-worthy attention rate."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Annotation, Document, annotate

POS_CLASSES = ("Noun", "Verb", "Adjective", "Adverb", "Other")


def pos_class(tag: str) -> str:
    """Coarse part-of-speech class from a tag string.

    Understands both the coarse tags used by the fallback annotator and
    Penn-Treebank-style prefixes.
    """
    t = tag.lower()
    if t.startswith(("noun", "nn", "np")) or t == "name":
        return "Noun"
    if t.startswith(("verb", "vb", "md")):
        return "Verb"
    if t.startswith(("adj", "jj")):
        return "Adjective"
    if t.startswith(("adv", "rb")):
        return "Adverb"
    return "Other"


def _subj_class(raw: str) -> str:
    return {"positive": "StrongPositive", "negative": "StrongNegative"}.get(
        raw, "None")


@dataclass
class TokenCategory:
    pos_class: str
    ne_class: str
    subjectivity: str


def categorize(annotation: Annotation) -> TokenCategory:
    pos, ne, subj = annotation
    return TokenCategory(pos_class=pos_class(pos), ne_class=ne,
                         subjectivity=_subj_class(subj))


@dataclass
class BreakdownReport:
    """Percentages of gold-summary tokens per quadrant, plus unseen.

    The four leaf cells and `unseen` sum to 100.
    """
    seen_in_input_gen: float
    seen_in_input_mis: float
    seen_not_input_gen: float
    seen_not_input_mis: float
    unseen: float
    n_tokens: int

    @property
    def seen_in_input_total(self) -> float:
        return self.seen_in_input_gen + self.seen_in_input_mis

    @property
    def seen_not_input_total(self) -> float:
        return self.seen_not_input_gen + self.seen_not_input_mis

    def to_dict(self) -> dict:
        return {
            "seen_in_input_gen": self.seen_in_input_gen,
            "seen_in_input_mis": self.seen_in_input_mis,
            "seen_in_input_total": self.seen_in_input_total,
            "seen_not_input_gen": self.seen_not_input_gen,
            "seen_not_input_mis": self.seen_not_input_mis,
            "seen_not_input_total": self.seen_not_input_total,
            "unseen": self.unseen,
            "n_tokens": self.n_tokens,
        }


@dataclass
class AttentionReport:
    """Share of output steps whose argmax-attention token falls in each
    category.  Categories overlap (PERSON is inside all_nes; nouns may be
    named entities), so percentages need not sum to 100."""
    person: float
    organization: float
    all_nes: float
    noun: float
    verb: float
    positive: float
    negative: float
    n_steps: int
    summary_worthy_rate: float | None = None

    def to_dict(self) -> dict:
        d = {"person": self.person, "organization": self.organization,
             "all_nes": self.all_nes, "noun": self.noun, "verb": self.verb,
             "positive": self.positive, "negative": self.negative,
             "n_steps": self.n_steps}
        if self.summary_worthy_rate is not None:
            d["summary_worthy_rate"] = self.summary_worthy_rate
        return d


def reuse_rate(docs: list[Document], pos_filter: str | None = None) -> float:
    """Fraction of abstract tokens that also occur in the document text.

    Type match on lowercased surface forms.  With `pos_filter` (a coarse
    POS class), only abstract tokens of that class are counted; this
    requires annotations.
    """
    reused = total = 0
    for doc in docs:
        text_types = set(doc.text_tokens)
        if pos_filter is None:
            kept = doc.abstract_tokens
        else:
            if doc.annotations is None:
                annotate(doc)
            kept = [tok for tok, ann in
                    zip(doc.abstract_tokens, doc.annotations.abstract)
                    if pos_class(ann[0]) == pos_filter]
        total += len(kept)
        reused += sum(tok in text_types for tok in kept)
    return reused / total if total else 0.0


def distribution_by_category(docs: list[Document], field: str,
                             where: str = "abstract",
                             use_fallback: bool = True) -> dict[str, float]:
    """Percentage of tokens per category in abstracts or texts.

    `field` is one of pos, ne, subjectivity.  Percentages sum to 100.
    """
    if field not in ("pos", "ne", "subjectivity"):
        raise ValueError(f"distribution_by_category: unknown field {field!r}")
    if where not in ("abstract", "text"):
        raise ValueError(f"distribution_by_category: unknown side {where!r}")
    counts: Counter = Counter()
    total = 0
    for doc in docs:
        if doc.annotations is None:
            if not use_fallback:
                raise ValueError(
                    f"document {doc.id} has no annotations and fallback is disabled")
            annotate(doc)
        anns = (doc.annotations.abstract if where == "abstract"
                else doc.annotations.text)
        for pos, ne, subj in anns:
            total += 1
            if field == "pos":
                counts[pos_class(pos)] += 1
            elif field == "ne":
                counts[ne] += 1
            else:
                counts[_subj_class(subj)] += 1
    if total == 0:
        return {}
    return {cat: 100.0 * n / total for cat, n in sorted(counts.items())}


def gold_token_breakdown(gold_abstracts: list[list[str]],
                         system_outputs: list[list[str]],
                         inputs: list[list[str]],
                         training_abstract_vocab: set[str]) -> BreakdownReport:
    """Classify each gold token by training exposure, input presence, and
    whether the system produced it.

    A gold occurrence counts as generated when matched to an output
    occurrence of the same token; each output occurrence certifies at
    most one gold occurrence (clipped multiset matching).
    """
    if not (len(gold_abstracts) == len(system_outputs) == len(inputs)):
        raise ValueError("gold_token_breakdown: misaligned inputs")
    cells = Counter()
    total = 0
    for gold, output, inp in zip(gold_abstracts, system_outputs, inputs):
        out_counts = Counter(output)
        input_types = set(inp)
        for tok, gold_count in Counter(gold).items():
            total += gold_count
            if tok not in training_abstract_vocab:
                cells["unseen"] += gold_count
                continue
            gen = min(gold_count, out_counts[tok])
            mis = gold_count - gen
            side = "in_input" if tok in input_types else "not_input"
            cells[f"seen_{side}_gen"] += gen
            cells[f"seen_{side}_mis"] += mis
    if total == 0:
        raise ValueError("gold_token_breakdown: no gold tokens")
    pct = lambda key: 100.0 * cells[key] / total
    return BreakdownReport(
        seen_in_input_gen=pct("seen_in_input_gen"),
        seen_in_input_mis=pct("seen_in_input_mis"),
        seen_not_input_gen=pct("seen_not_input_gen"),
        seen_not_input_mis=pct("seen_not_input_mis"),
        unseen=pct("unseen"), n_tokens=total)


def _step_attention(step) -> np.ndarray:
    att = getattr(step, "attention", step)
    return np.asarray(att, dtype=float)


def attention_categorize(decode_traces: list[list],
                         inputs: list[list[str]],
                         annotations: list[list[Annotation]]) -> AttentionReport:
    """Tally categories of the argmax-attention input token per output step.

    Traces are per-document lists of decode steps (DecoderStepOutput or
    bare attention vectors).  Argmax ties break to the lowest position.
    """
    if not (len(decode_traces) == len(inputs) == len(annotations)):
        raise ValueError("attention_categorize: misaligned inputs")
    tallies = Counter()
    n_steps = 0
    for trace, tokens, anns in zip(decode_traces, inputs, annotations):
        if len(tokens) != len(anns):
            raise ValueError("attention_categorize: annotations misaligned")
        for step in trace:
            att = _step_attention(step)
            if att.shape[0] != len(tokens):
                raise ValueError(
                    "attention_categorize: attention misaligned with input")
            cat = categorize(anns[int(np.argmax(att))])
            n_steps += 1
            if cat.ne_class == "PERSON":
                tallies["person"] += 1
            if cat.ne_class == "ORGANIZATION":
                tallies["organization"] += 1
            if cat.ne_class != "NONE":
                tallies["all_nes"] += 1
            if cat.pos_class == "Noun":
                tallies["noun"] += 1
            if cat.pos_class == "Verb":
                tallies["verb"] += 1
            if cat.subjectivity == "StrongPositive":
                tallies["positive"] += 1
            if cat.subjectivity == "StrongNegative":
                tallies["negative"] += 1
    if n_steps == 0:
        raise ValueError("attention_categorize: empty traces")
    pct = lambda key: 100.0 * tallies[key] / n_steps
    return AttentionReport(
        person=pct("person"), organization=pct("organization"),
        all_nes=pct("all_nes"), noun=pct("noun"), verb=pct("verb"),
        positive=pct("positive"), negative=pct("negative"), n_steps=n_steps)


def summary_worthy_rate(decode_traces: list[list],
                        inputs: list[list[str]],
                        gold_abstracts: list[list[str]]) -> float:
    """Fraction of output steps whose argmax-attention input token is
    reused in the gold abstract of the same document."""
    if not (len(decode_traces) == len(inputs) == len(gold_abstracts)):
        raise ValueError("summary_worthy_rate: misaligned inputs")
    worthy = steps = 0
    for trace, tokens, gold in zip(decode_traces, inputs, gold_abstracts):
        gold_types = set(gold)
        for step in trace:
            att = _step_attention(step)
            if att.shape[0] != len(tokens):
                raise ValueError(
                    "summary_worthy_rate: attention misaligned with input")
            steps += 1
            worthy += tokens[int(np.argmax(att))] in gold_types
    return worthy / steps if steps else 0.0

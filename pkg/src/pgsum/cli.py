"""Command-line entry point wiring the full pipeline.

Subcommands: prepare, train, pretrain, decode, evaluate, baseline,
analyze.  Settings come from a flat ``key = value`` config file; CLI
flags override config values, which override defaults.  Every run writes
a manifest (resolved settings + seed + version) next to its outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import analysis, corpus, metrics
from .corpus import Document, SplitSpec, Vocabulary
from .model import ModelConfig, beam_decode, greedy_decode
from .training import (Dataset, Hyperparams, Regime, TrainingDiverged,
                       TrainState, docs_to_pairs, extract_pairs_to_pairs,
                       load_checkpoint, pretrain_then_finetune,
                       save_checkpoint, train, write_history,
                       IN_DOMAIN, MIX_DOMAIN, OUT_OF_DOMAIN)

log = logging.getLogger("pgsum")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# settings understood by the config file and the train/pretrain overrides
MODEL_KEYS = ("hidden_size", "embedding_size", "max_decode_len", "max_input_len")
HYPER_KEYS = ("learning_rate", "batch_size", "eval_every", "patience",
              "max_steps", "seed", "optimizer", "clip_norm", "pretrain_steps")
RUN_KEYS = ("source_domain", "target_domain", "beam_width")

_DEFAULTS = {
    **{k: getattr(ModelConfig(vocab_size=5), k) for k in MODEL_KEYS},
    **{k: getattr(Hyperparams(), k) for k in HYPER_KEYS},
    "source_domain": corpus.NEWS,
    "target_domain": corpus.OPINION,
    "beam_width": 1,
}


def parse_config_file(path) -> dict:
    """Flat ``key = value`` settings; unknown keys are rejected."""
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path} line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _DEFAULTS:
                raise DataError(f"{path} line {lineno}: unknown setting {key!r}")
            settings[key] = value
    return settings


def resolve_settings(args) -> dict:
    """Defaults, overridden by the config file, overridden by CLI flags."""
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(parse_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    # coerce strings from the config file to the default's type
    for key, default in _DEFAULTS.items():
        if isinstance(settings[key], str) and not isinstance(default, str):
            caster = type(default)
            try:
                settings[key] = caster(settings[key])
            except ValueError as exc:
                raise DataError(f"setting {key}: {exc}") from exc
    return settings


def write_manifest(out_dir: Path, command: str, settings: dict) -> None:
    manifest = {"command": command, "settings": settings,
                "seed": settings.get("seed"), "version": __version__}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _load_corpus(path) -> list[Document]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    docs = corpus.ingest(path)
    if not docs:
        raise DataError(f"no usable documents in {path}")
    return docs


def _model_config(settings, vocab) -> ModelConfig:
    return ModelConfig(vocab_size=len(vocab),
                       **{k: settings[k] for k in MODEL_KEYS})


def _hyperparams(settings) -> Hyperparams:
    return Hyperparams(**{k: settings[k] for k in HYPER_KEYS})


# ---------------------------------------------------------------------------
# subcommands

def cmd_prepare(args) -> int:
    out_dir = Path(args.out_dir)
    docs = _load_corpus(args.corpus)
    kept = corpus.filter_pairs(docs)
    spec = SplitSpec(args.train_frac, args.valid_frac, args.test_frac)
    tr, va, te = corpus.split(kept, spec, args.seed)
    vocab = corpus.build_vocab(kept, args.vocab_size)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", tr), ("valid", va), ("test", te)):
        corpus.serialize(part, out_dir / f"{name}.jsonl")
    vocab.save(out_dir / "vocab.txt")
    write_manifest(out_dir, "prepare", {
        "corpus": str(args.corpus), "seed": args.seed,
        "vocab_size": args.vocab_size, "train_frac": spec.train_frac,
        "valid_frac": spec.valid_frac, "test_frac": spec.test_frac})
    print(f"ingested {len(docs)} documents, kept {len(kept)} after length filter")
    print(f"train/valid/test: {len(tr)}/{len(va)}/{len(te)}; "
          f"vocabulary {len(vocab)} words")
    return 0


def _load_splits(data_dir) -> tuple[dict[str, list[Document]], Vocabulary]:
    data_dir = Path(data_dir)
    splits = {}
    for name in ("train", "valid", "test"):
        path = data_dir / f"{name}.jsonl"
        if not path.exists():
            raise DataError(f"missing split file {path}; run prepare first")
        splits[name] = corpus.ingest(path)
    vocab_path = data_dir / "vocab.txt"
    if not vocab_path.exists():
        raise DataError(f"missing vocabulary {vocab_path}; run prepare first")
    return splits, Vocabulary.load(vocab_path)


def _domain_set(splits, domain) -> Dataset:
    train = [d for d in splits["train"] if d.domain == domain]
    valid = [d for d in splits["valid"] if d.domain == domain]
    if not train:
        raise DataError(f"no training documents for domain {domain!r}")
    return Dataset(train=docs_to_pairs(train), valid=docs_to_pairs(valid))


def cmd_train(args) -> int:
    settings = resolve_settings(args)
    splits, vocab = _load_splits(args.data_dir)
    config = _model_config(settings, vocab)
    hp = _hyperparams(settings)
    source = settings["source_domain"]
    target = settings["target_domain"]
    if args.regime == IN_DOMAIN:
        regime = Regime(IN_DOMAIN, target_set=_domain_set(splits, target))
    elif args.regime == OUT_OF_DOMAIN:
        regime = Regime(OUT_OF_DOMAIN, source_set=_domain_set(splits, source))
    else:
        regime = Regime(MIX_DOMAIN, source_set=_domain_set(splits, source),
                        target_set=_domain_set(splits, target))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = train(regime, config, vocab, hp)
    except TrainingDiverged as exc:
        save_checkpoint(exc.state, out_dir / "last-good.pgck")
        log.error("training diverged: %s (last good checkpoint saved)", exc)
        return 3
    state = TrainState(params=result.params, config=config, step=result.steps,
                       best_valid_loss=result.best_valid_loss)
    save_checkpoint(state, out_dir / "checkpoint.pgck")
    write_history(result.history, out_dir / "history.csv")
    write_manifest(out_dir, f"train:{args.regime}", settings)
    print(f"trained {result.steps} steps; "
          f"best validation loss {result.best_valid_loss:.6f}")
    return 0


def cmd_pretrain(args) -> int:
    settings = resolve_settings(args)
    splits, vocab = _load_splits(args.data_dir)
    config = _model_config(settings, vocab)
    hp = _hyperparams(settings)
    pairs, fraction = corpus.ingest_extract_pairs(args.extract_pairs)
    if not pairs:
        raise DataError(f"no extract pairs in {args.extract_pairs}")
    extract_set = Dataset(train=extract_pairs_to_pairs(pairs), valid=[])
    annotated = _domain_set(splits, settings["target_domain"])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        phase1, phase2 = pretrain_then_finetune(extract_set, annotated,
                                                config, vocab, hp)
    except TrainingDiverged as exc:
        save_checkpoint(exc.state, out_dir / "last-good.pgck")
        log.error("training diverged: %s (last good checkpoint saved)", exc)
        return 3
    save_checkpoint(TrainState(params=phase1.params, config=config,
                               step=phase1.steps,
                               best_valid_loss=phase1.best_valid_loss),
                    out_dir / "pretrained.pgck")
    save_checkpoint(TrainState(params=phase2.params, config=config,
                               step=phase2.steps,
                               best_valid_loss=phase2.best_valid_loss),
                    out_dir / "checkpoint.pgck")
    write_history(phase1.history + phase2.history, out_dir / "history.csv")
    write_manifest(out_dir, "pretrain", settings)
    print(f"extract pairs: {len(pairs)} ({fraction:.1%} extractive); "
          f"fine-tuned best validation loss {phase2.best_valid_loss:.6f}")
    return 0


def cmd_decode(args) -> int:
    ck_path = Path(args.checkpoint)
    if not ck_path.exists():
        raise DataError(f"checkpoint not found: {ck_path}")
    state = load_checkpoint(ck_path)
    vocab = Vocabulary.load(args.vocab)
    if len(vocab) != state.config.vocab_size:
        raise DataError("vocabulary size does not match checkpoint config")
    docs = _load_corpus(args.input)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "outputs.jsonl", "w", encoding="utf-8") as out_fh, \
            open(out_dir / "traces.jsonl", "w", encoding="utf-8") as trace_fh:
        for doc in docs:
            if args.beam > 1:
                result = beam_decode(doc.text_tokens, state.params,
                                     state.config, vocab, args.beam)
            else:
                result = greedy_decode(doc.text_tokens, state.params,
                                       state.config, vocab)
            out_fh.write(json.dumps(
                {"id": doc.id, "tokens": result.tokens}) + "\n")
            trace_fh.write(json.dumps({
                "id": doc.id,
                "steps": [{"attention": step.attention.tolist(),
                           "p_gen": step.p_gen} for step in result.trace],
            }) + "\n")
    write_manifest(out_dir, "decode", {
        "checkpoint": str(ck_path), "input": str(args.input),
        "beam_width": args.beam, "seed": None})
    print(f"decoded {len(docs)} documents")
    return 0


def _load_outputs(path) -> dict[str, list[str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"outputs file not found: {path}")
    outputs = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                raw = json.loads(line)
                outputs[raw["id"]] = raw["tokens"]
    return outputs


def _load_traces(path) -> dict[str, list]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"traces file not found: {path}")
    traces = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                raw = json.loads(line)
                traces[raw["id"]] = [step["attention"] for step in raw["steps"]]
    return traces


def _aligned(outputs: dict, docs: list[Document]):
    missing = [d.id for d in docs if d.id not in outputs]
    if missing:
        raise DataError(f"outputs missing for document ids: {missing[:5]}")
    return [outputs[d.id] for d in docs]


def cmd_evaluate(args) -> int:
    outputs = _load_outputs(args.outputs)
    docs = _load_corpus(args.references)
    candidates = _aligned(outputs, docs)
    references = [d.abstract_tokens for d in docs]
    score = metrics.evaluate_corpus(candidates, references)
    payload = {"rouge2": score.rouge2, "rougeL": score.rougeL,
               "bleu": score.bleu, "avg_len": score.avg_len}
    print(json.dumps(payload))
    if args.per_pair:
        with open(args.per_pair, "w", encoding="utf-8") as fh:
            fh.write("id,rouge2,rougeL,bleu,len\n")
            for doc, cand in zip(docs, candidates):
                fh.write(f"{doc.id},{metrics.rouge_2(cand, doc.abstract_tokens)!r},"
                         f"{metrics.rouge_l(cand, doc.abstract_tokens)!r},"
                         f"{metrics.bleu_2(cand, doc.abstract_tokens)!r},"
                         f"{len(cand)}\n")
    return 0


def cmd_baseline(args) -> int:
    docs = _load_corpus(args.corpus)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "outputs.jsonl", "w", encoding="utf-8") as fh:
        for doc in docs:
            if args.which == "first-sentence":
                tokens = metrics.baseline_first_sentence(doc.text_tokens)
            else:
                tokens = metrics.baseline_first_k(doc.text_tokens, doc.domain,
                                                  k=args.k)
            fh.write(json.dumps({"id": doc.id, "tokens": tokens}) + "\n")
    write_manifest(out_dir, f"baseline:{args.which}",
                   {"corpus": str(args.corpus), "k": args.k, "seed": None})
    print(f"wrote {len(docs)} baseline outputs")
    return 0


def _write_category_csv(path, rows: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("category,percentage\n")
        for category, pct in rows.items():
            fh.write(f"{category},{pct!r}\n")


def cmd_analyze(args) -> int:
    which = args.which
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    if which == "reuse":
        docs = _load_corpus(args.corpus)
        payload = {"reuse_rate": analysis.reuse_rate(docs, args.pos)}
    elif which == "distribution":
        docs = _load_corpus(args.corpus)
        dist = analysis.distribution_by_category(docs, args.field, args.where)
        payload = {"field": args.field, "where": args.where,
                   "distribution": dist}
        if out_dir:
            _write_category_csv(out_dir / "distribution.csv", dist)
    elif which == "breakdown":
        docs = _load_corpus(args.corpus)
        outputs = _aligned(_load_outputs(args.outputs), docs)
        train_docs = _load_corpus(args.train_corpus)
        seen = {tok for d in train_docs for tok in d.abstract_tokens}
        report = analysis.gold_token_breakdown(
            [d.abstract_tokens for d in docs], outputs,
            [d.text_tokens for d in docs], seen)
        payload = report.to_dict()
    elif which in ("attention", "summary-worthy"):
        docs = _load_corpus(args.corpus)
        traces_by_id = _load_traces(args.traces)
        traces = _aligned(traces_by_id, docs)
        inputs = [d.text_tokens for d in docs]
        if which == "attention":
            for doc in docs:
                corpus.annotate(doc)
            report = analysis.attention_categorize(
                traces, inputs, [d.annotations.text for d in docs])
            report.summary_worthy_rate = analysis.summary_worthy_rate(
                traces, inputs, [d.abstract_tokens for d in docs])
            payload = report.to_dict()
            if out_dir:
                _write_category_csv(out_dir / "attention.csv", {
                    k: v for k, v in payload.items()
                    if isinstance(v, float) and k != "summary_worthy_rate"})
        else:
            payload = {"summary_worthy_rate": analysis.summary_worthy_rate(
                traces, inputs, [d.abstract_tokens for d in docs])}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown analysis {which!r}")

    print(json.dumps(payload))
    if out_dir:
        (out_dir / f"{which}.json").write_text(json.dumps(payload, indent=2) + "\n")
        write_manifest(out_dir, f"analyze:{which}", {
            "corpus": str(getattr(args, "corpus", None)), "seed": None})
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="pgsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="filter, split, and build vocabulary")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--valid-frac", type=float, default=0.15)
    p.add_argument("--test-frac", type=float, default=0.10)
    p.add_argument("--vocab-size", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prepare)

    def add_train_flags(p):
        p.add_argument("--config", default=None,
                       help="key = value settings file")
        for key in MODEL_KEYS + ("batch_size", "eval_every", "patience",
                                 "max_steps", "seed", "pretrain_steps"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int,
                           default=None)
        for key in ("learning_rate", "clip_norm"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float,
                           default=None)
        for key in ("optimizer", "source_domain", "target_domain"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)

    p = sub.add_parser("train", help="run one training regime")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--regime", required=True,
                   choices=[IN_DOMAIN, OUT_OF_DOMAIN, MIX_DOMAIN])
    add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pretrain",
                       help="extract pre-training then fine-tuning")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--extract-pairs", required=True)
    add_train_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("decode", help="generate summaries from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--beam", type=int, default=1)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score outputs against references")
    p.add_argument("--outputs", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--per-pair", default=None, help="per-pair CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="lead-based baseline outputs")
    p.add_argument("which", choices=["first-sentence", "first-k"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("analyze", help="transfer and corpus analyses")
    p.add_argument("which", choices=["reuse", "distribution", "breakdown",
                                     "attention", "summary-worthy"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--outputs", default=None)
    p.add_argument("--traces", default=None)
    p.add_argument("--train-corpus", default=None)
    p.add_argument("--field", choices=["pos", "ne", "subjectivity"],
                   default="pos")
    p.add_argument("--where", choices=["abstract", "text"], default="abstract")
    p.add_argument("--pos", default=None,
                   help="restrict reuse rate to a POS class")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analyze":
            if args.which == "breakdown" and not (args.outputs and args.train_corpus):
                raise UsageError("breakdown needs --outputs and --train-corpus")
            if args.which in ("attention", "summary-worthy") and not args.traces:
                raise UsageError(f"{args.which} needs --traces")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Scikit-learn style estimator facade over the summarizer.

Wraps vocabulary construction, training, and decoding behind fit/predict
so the model composes with sklearn pipelines and model selection.
"""
from __future__ import annotations

import random

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Document, build_vocab, tokenize
from .metrics import evaluate_corpus
from .model import ModelConfig, beam_decode, greedy_decode, init_params
from .training import Hyperparams, fit


def _as_tokens(x) -> list[str]:
    if isinstance(x, str):
        return tokenize(x)
    toks = list(x)
    if not all(isinstance(t, str) for t in toks):
        raise ValueError("inputs must be strings or sequences of string tokens")
    return toks


class PointerGeneratorSummarizer(BaseEstimator):
    """Abstractive summarizer with a copy mechanism.

    Parameters follow sklearn conventions: all are simple constructor
    arguments, and fitted state lives in trailing-underscore attributes.

    X is a sequence of documents (strings or token sequences); y is the
    aligned sequence of reference summaries.
    """

    def __init__(self, hidden_size=32, embedding_size=32, vocab_size=500,
                 max_decode_len=24, max_input_len=400, learning_rate=0.05,
                 batch_size=4, max_steps=800, eval_every=25, patience=5,
                 valid_fraction=0.15, beam_width=1, seed=0):
        self.hidden_size = hidden_size
        self.embedding_size = embedding_size
        self.vocab_size = vocab_size
        self.max_decode_len = max_decode_len
        self.max_input_len = max_input_len
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.eval_every = eval_every
        self.patience = patience
        self.valid_fraction = valid_fraction
        self.beam_width = beam_width
        self.seed = seed

    def fit(self, X, y):
        pairs = [(_as_tokens(a), _as_tokens(b)) for a, b in zip(X, y)]
        if len(pairs) != len(list(X)) or not pairs:
            raise ValueError("X and y must be non-empty and aligned")
        if any(not a or not b for a, b in pairs):
            raise ValueError("documents and summaries must be non-empty")
        docs = [Document(id=str(i), domain="other", section="",
                         text_tokens=a, abstract_tokens=b)
                for i, (a, b) in enumerate(pairs)]
        self.vocab_ = build_vocab(docs, self.vocab_size)
        self.config_ = ModelConfig(
            vocab_size=len(self.vocab_), hidden_size=self.hidden_size,
            embedding_size=self.embedding_size,
            max_decode_len=self.max_decode_len,
            max_input_len=self.max_input_len)
        hp = Hyperparams(learning_rate=self.learning_rate,
                         batch_size=self.batch_size, max_steps=self.max_steps,
                         eval_every=self.eval_every, patience=self.patience,
                         seed=self.seed)
        shuffled = list(pairs)
        random.Random(self.seed).shuffle(shuffled)
        n_valid = int(self.valid_fraction * len(shuffled))
        valid, train = shuffled[:n_valid], shuffled[n_valid:]
        params = init_params(self.config_, self.seed)
        result = fit(train or shuffled, valid, params, self.config_,
                     self.vocab_, hp)
        self.params_ = result.params
        self.history_ = result.history
        self.best_valid_loss_ = result.best_valid_loss
        return self

    def predict(self, X) -> list[list[str]]:
        check_is_fitted(self, "params_")
        outputs = []
        for x in X:
            tokens = _as_tokens(x)
            if self.beam_width > 1:
                result = beam_decode(tokens, self.params_, self.config_,
                                     self.vocab_, self.beam_width)
            else:
                result = greedy_decode(tokens, self.params_, self.config_,
                                       self.vocab_)
            outputs.append(result.tokens)
        return outputs

    def score(self, X, y) -> float:
        """Corpus BLEU of predictions against references."""
        refs = [_as_tokens(b) for b in y]
        return evaluate_corpus(self.predict(X), refs).bleu

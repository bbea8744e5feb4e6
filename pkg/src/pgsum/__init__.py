"""Pointer-generator summarization toolkit with from-scratch autodiff."""

__version__ = "0.1.0"

from .autodiff import Tensor, gradient, finite_difference_check
from .corpus import (Document, Vocabulary, tokenize, ingest, serialize,
                     filter_pairs, build_vocab, split,
                     generate_synthetic_corpus)
from .model import (ModelConfig, init_params, greedy_decode, beam_decode,
                    sequence_loss, mixture)
from .metrics import rouge_2, rouge_l, bleu_2, evaluate_corpus
from .training import (Hyperparams, Regime, Dataset, train,
                       pretrain_then_finetune, save_checkpoint,
                       load_checkpoint, TrainingDiverged)
from .estimator import PointerGeneratorSummarizer

__all__ = [
    "Tensor", "gradient", "finite_difference_check",
    "Document", "Vocabulary", "tokenize", "ingest", "serialize",
    "filter_pairs", "build_vocab", "split", "generate_synthetic_corpus",
    "ModelConfig", "init_params", "greedy_decode", "beam_decode",
    "sequence_loss", "mixture",
    "rouge_2", "rouge_l", "bleu_2", "evaluate_corpus",
    "Hyperparams", "Regime", "Dataset", "train", "pretrain_then_finetune",
    "save_checkpoint", "load_checkpoint", "TrainingDiverged",
    "PointerGeneratorSummarizer",
    "__version__",
]

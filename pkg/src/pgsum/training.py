"""Training regimes with checkpointing and early stopping.

Default optimizer is Adam with global gradient-norm clipping at 2.0
(Adagrad and plain SGD are available but converge far slower at desk
scale).  Early stopping watches a moving average (window 3) of validation
loss and keeps the parameters from the best raw validation loss seen.
"""
from __future__ import annotations

import json
import random
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import Document, ExtractPair, Vocabulary
from .model import ModelConfig, ModelParams, init_params, param_list, sequence_loss

PRETRAIN_EXTRACTS = "pretrain-extracts"
IN_DOMAIN = "in-domain"
OUT_OF_DOMAIN = "out-of-domain"
MIX_DOMAIN = "mix-domain"

# (input tokens, reference tokens)
Pair = tuple[list[str], list[str]]


@dataclass
class Hyperparams:
    learning_rate: float = 0.05
    batch_size: int = 4
    eval_every: int = 25
    patience: int = 5
    max_steps: int = 800
    seed: int = 0
    optimizer: str = "adam"      # "adam", "adagrad", or "sgd"
    clip_norm: float = 2.0
    adagrad_init_acc: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    smooth_window: int = 3
    pretrain_steps: int = 150


@dataclass
class Dataset:
    train: list[Pair]
    valid: list[Pair]


@dataclass
class Regime:
    kind: str
    source_set: Dataset | None = None
    target_set: Dataset | None = None
    init_params: ModelParams | None = None

    def __post_init__(self):
        if self.kind not in (PRETRAIN_EXTRACTS, IN_DOMAIN, OUT_OF_DOMAIN, MIX_DOMAIN):
            raise ValueError(f"unknown regime kind {self.kind!r}")
        if self.kind == MIX_DOMAIN and (self.source_set is None or self.target_set is None):
            raise ValueError("mix-domain requires both source and target sets")
        if self.kind in (IN_DOMAIN,) and self.target_set is None:
            raise ValueError("in-domain requires a target set")
        if self.kind in (OUT_OF_DOMAIN, PRETRAIN_EXTRACTS) and self.source_set is None:
            raise ValueError(f"{self.kind} requires a source set")


@dataclass
class TrainState:
    params: ModelParams
    config: ModelConfig
    step: int = 0
    best_valid_loss: float = float("inf")
    steps_since_best: int = 0


# history rows: (step, phase, train_loss, valid_loss)
HistoryRow = tuple[int, str, float, float]


@dataclass
class TrainResult:
    params: ModelParams
    config: ModelConfig
    history: list[HistoryRow]
    best_valid_loss: float
    steps: int


class TrainingDiverged(RuntimeError):
    """Loss went NaN; carries the last good state for salvage."""

    def __init__(self, message: str, state: TrainState):
        super().__init__(message)
        self.state = state


def docs_to_pairs(docs: list[Document]) -> list[Pair]:
    return [(d.text_tokens, d.abstract_tokens) for d in docs]


def extract_pairs_to_pairs(pairs: list[ExtractPair]) -> list[Pair]:
    return [(p.lead_tokens, p.description_tokens) for p in pairs]


def _copy_params(params: ModelParams) -> ModelParams:
    return {k: Tensor(v.data.copy()) for k, v in params.items()}


def _mean_loss(pairs: list[Pair], params: ModelParams, config: ModelConfig,
               vocab: Vocabulary) -> float:
    total = 0.0
    for inp, ref in pairs:
        total += sequence_loss(inp, ref, params, config, vocab).item()
    return total / len(pairs)


class _Optimizer:
    """Clipped Adam, Adagrad, or SGD over the flat parameter list."""

    def __init__(self, params: ModelParams, hp: Hyperparams):
        self.names = sorted(params)
        self.params = params
        self.hp = hp
        self.t = 0
        if hp.optimizer == "adagrad":
            self.acc = {n: np.full_like(params[n].data, hp.adagrad_init_acc)
                        for n in self.names}
        elif hp.optimizer == "adam":
            self.m = {n: np.zeros_like(params[n].data) for n in self.names}
            self.v = {n: np.zeros_like(params[n].data) for n in self.names}
        elif hp.optimizer != "sgd":
            raise ValueError(f"unknown optimizer {hp.optimizer!r}")

    def step(self, grads: dict[str, np.ndarray]) -> None:
        norm = np.sqrt(sum(float((g ** 2).sum()) for g in grads.values()))
        clip = min(1.0, self.hp.clip_norm / norm) if norm > 0 else 1.0
        lr, hp = self.hp.learning_rate, self.hp
        self.t += 1
        for n in self.names:
            g = grads[n] * clip
            if hp.optimizer == "adam":
                self.m[n] = hp.adam_beta1 * self.m[n] + (1 - hp.adam_beta1) * g
                self.v[n] = hp.adam_beta2 * self.v[n] + (1 - hp.adam_beta2) * g * g
                m_hat = self.m[n] / (1 - hp.adam_beta1 ** self.t)
                v_hat = self.v[n] / (1 - hp.adam_beta2 ** self.t)
                self.params[n].data -= lr * m_hat / (np.sqrt(v_hat) + hp.adam_eps)
            elif hp.optimizer == "adagrad":
                self.acc[n] += g * g
                self.params[n].data -= lr * g / np.sqrt(self.acc[n])
            else:
                self.params[n].data -= lr * g

    def batch_step(self, batch: list[Pair], config: ModelConfig,
                   vocab: Vocabulary) -> float:
        """Mean-loss gradient over the batch, then one update."""
        tensors = [self.params[n] for n in self.names]
        accum = [np.zeros_like(t.data) for t in tensors]
        total = 0.0
        for inp, ref in batch:
            loss = sequence_loss(inp, ref, self.params, config, vocab)
            total += loss.item()
            for acc, g in zip(accum, ad.gradient(loss, tensors)):
                acc += g
        scale = 1.0 / len(batch)
        self.step({n: a * scale for n, a in zip(self.names, accum)})
        return total / len(batch)


def fit(train_pairs: list[Pair], valid_pairs: list[Pair], params: ModelParams,
        config: ModelConfig, vocab: Vocabulary, hp: Hyperparams,
        phase: str = "train", fixed_steps: int | None = None) -> TrainResult:
    """SGD with early stopping; `fixed_steps` disables the stopper and runs
    a fixed budget instead (used for extract pre-training)."""
    if not train_pairs:
        raise ValueError("fit: empty training set")
    rng = random.Random(hp.seed)
    optimizer = _Optimizer(params, hp)
    history: list[HistoryRow] = []
    best = _copy_params(params)
    best_valid = float("inf")
    best_smoothed = float("inf")
    recent_valid: list[float] = []
    bad_evals = 0
    max_steps = fixed_steps if fixed_steps is not None else hp.max_steps

    order: list[Pair] = []
    step = 0
    while step < max_steps:
        if not order:
            order = list(train_pairs)
            rng.shuffle(order)
        batch = order[:hp.batch_size]
        del order[:hp.batch_size]
        step += 1
        train_loss = optimizer.batch_step(batch, config, vocab)
        if not np.isfinite(train_loss):
            raise TrainingDiverged(
                f"training loss became non-finite at step {step}",
                TrainState(params=best, config=config, step=step,
                           best_valid_loss=best_valid))
        evaluate_now = valid_pairs and (step % hp.eval_every == 0 or step == max_steps)
        if not evaluate_now:
            continue
        valid_loss = _mean_loss(valid_pairs, params, config, vocab)
        if not np.isfinite(valid_loss):
            raise TrainingDiverged(
                f"validation loss became non-finite at step {step}",
                TrainState(params=best, config=config, step=step,
                           best_valid_loss=best_valid))
        history.append((step, phase, train_loss, valid_loss))
        if valid_loss < best_valid:
            best_valid = valid_loss
            best = _copy_params(params)
        if fixed_steps is not None:
            continue
        recent_valid.append(valid_loss)
        smoothed = sum(recent_valid[-hp.smooth_window:]) / \
            len(recent_valid[-hp.smooth_window:])
        if smoothed < best_smoothed:
            best_smoothed = smoothed
            bad_evals = 0
        else:
            bad_evals += 1
            if bad_evals > hp.patience:
                break
    if not valid_pairs:
        best = _copy_params(params)
        best_valid = float("nan")
    final = best if fixed_steps is None else _copy_params(params)
    return TrainResult(params=final, config=config, history=history,
                       best_valid_loss=best_valid, steps=step)


def train(regime: Regime, config: ModelConfig, vocab: Vocabulary,
          hp: Hyperparams) -> TrainResult:
    """Run one training regime and return the best checkpointed parameters."""
    params = (_copy_params(regime.init_params) if regime.init_params is not None
              else init_params(config, hp.seed))
    if regime.kind == PRETRAIN_EXTRACTS:
        ds = regime.source_set
        return fit(ds.train, ds.valid, params, config, vocab, hp,
                   phase="pretrain", fixed_steps=hp.pretrain_steps)
    if regime.kind == IN_DOMAIN:
        ds = regime.target_set
        return fit(ds.train, ds.valid, params, config, vocab, hp, phase="in-domain")
    if regime.kind == OUT_OF_DOMAIN:
        ds = regime.source_set
        return fit(ds.train, ds.valid, params, config, vocab, hp,
                   phase="out-of-domain")
    # mix-domain: source phase to its own early stop, target continues
    # from the resulting parameters with no reinitialization
    phase1 = fit(regime.source_set.train, regime.source_set.valid, params,
                 config, vocab, hp, phase="mix-source")
    phase2 = fit(regime.target_set.train, regime.target_set.valid,
                 phase1.params, config, vocab, hp, phase="mix-target")
    return TrainResult(params=phase2.params, config=config,
                       history=phase1.history + phase2.history,
                       best_valid_loss=phase2.best_valid_loss,
                       steps=phase1.steps + phase2.steps)


def pretrain_then_finetune(extract_set: Dataset, annotated_set: Dataset,
                           config: ModelConfig, vocab: Vocabulary,
                           hp: Hyperparams) -> tuple[TrainResult, TrainResult]:
    """Phase 1: fixed-budget training on extract pairs; phase 2: fine-tune
    on annotated pairs with early stopping.  Both results are returned so
    both checkpoints can be retained.  A zero phase-1 budget degenerates
    to plain training on the annotated set."""
    params = init_params(config, hp.seed)
    if hp.pretrain_steps > 0:
        phase1 = fit(extract_set.train, extract_set.valid, params, config,
                     vocab, hp, phase="pretrain", fixed_steps=hp.pretrain_steps)
    else:
        phase1 = TrainResult(params=_copy_params(params), config=config,
                             history=[], best_valid_loss=float("nan"), steps=0)
    phase2 = fit(annotated_set.train, annotated_set.valid,
                 _copy_params(phase1.params), config, vocab, hp,
                 phase="finetune")
    return phase1, phase2


def write_history(history: list[HistoryRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,phase,train_loss,valid_loss\n")
        for step, phase, train_loss, valid_loss in history:
            fh.write(f"{step},{phase},{train_loss!r},{valid_loss!r}\n")


# ---------------------------------------------------------------------------
# Checkpoint container: magic, version, JSON header, raw float64 data.
# save -> load -> save is byte-identical.

_MAGIC = b"PGSUMCK1"


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or version-mismatched checkpoints."""


def save_checkpoint(state: TrainState, path) -> None:
    names = sorted(state.params)
    header = {
        "version": 1,
        "config": asdict(state.config),
        "step": state.step,
        "best_valid_loss": state.best_valid_loss,
        "tensors": [{"name": n, "shape": list(state.params[n].data.shape)}
                    for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(state.params[n].data,
                                          dtype="<f8").tobytes())


def load_checkpoint(path) -> TrainState:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    offset = len(_MAGIC)
    if len(raw) < offset + 4:
        raise CheckpointError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if len(raw) < offset + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[offset:offset + hlen])
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
    if header.get("version") != 1:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {header.get('version')}")
    offset += hlen
    config = ModelConfig(**header["config"])
    params: ModelParams = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if len(raw) < offset + nbytes:
            raise CheckpointError(f"{path}: truncated tensor data")
        arr = np.frombuffer(raw, dtype="<f8", count=count,
                            offset=offset).reshape(shape).copy()
        params[spec["name"]] = Tensor(arr)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after tensor data")
    return TrainState(params=params, config=config, step=header["step"],
                      best_valid_loss=header["best_valid_loss"])

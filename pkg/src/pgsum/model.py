"""Pointer-generator attentional encoder-decoder.

Bidirectional LSTM encoder, unidirectional LSTM decoder, additive
attention, a sigmoid generation gate, and a final distribution that mixes
generating from the vocabulary with copying from the input:

    p_final(w) = p_gen * p_vocab(w) + (1 - p_gen) * sum_{i: w_i = w} attention_i

Out-of-vocabulary input words are copyable: the final distribution lives
over the vocabulary extended with the input's unique OOV surface forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import STOP_ID, START_ID, UNK_ID, Vocabulary


@dataclass
class ModelConfig:
    vocab_size: int
    hidden_size: int = 32
    embedding_size: int = 32
    max_decode_len: int = 24
    max_input_len: int = 400

    def __post_init__(self):
        for name in ("vocab_size", "hidden_size", "embedding_size",
                     "max_decode_len", "max_input_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


# ModelParams is a plain dict of named leaf tensors.
ModelParams = dict[str, Tensor]


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Seeded initialization: weights uniform in [-0.1, 0.1], biases zero."""
    rng = np.random.default_rng(seed)
    h, e, v = config.hidden_size, config.embedding_size, config.vocab_size

    def w(*shape):
        return Tensor(rng.uniform(-0.1, 0.1, size=shape))

    def b(*shape):
        return Tensor(np.zeros(shape))

    return {
        "embed": w(v, e),
        "enc_fwd_W": w(4 * h, e + h), "enc_fwd_b": b(4 * h),
        "enc_bwd_W": w(4 * h, e + h), "enc_bwd_b": b(4 * h),
        "reduce_h_W": w(h, 2 * h), "reduce_h_b": b(h),
        "reduce_c_W": w(h, 2 * h), "reduce_c_b": b(h),
        "dec_W": w(4 * h, e + h), "dec_b": b(4 * h),
        # attention weights are stored input-side-transposed so encoder
        # projections are a single right-multiplication over all positions
        "attn_enc_W": w(2 * h, h), "attn_dec_W": w(h, h),
        "attn_b": b(h), "attn_v": w(h),
        "gate_ctx_w": w(2 * h), "gate_state_w": w(h), "gate_in_w": w(e),
        "gate_b": b(),
        "out_W": w(v, 3 * h), "out_b": b(v),
    }


def param_list(params: ModelParams) -> list[Tensor]:
    """Parameters in a stable order (sorted by name)."""
    return [params[k] for k in sorted(params)]


@dataclass
class EncoderStates:
    states: Tensor            # (T, 2*hidden) one row per input position
    attn_proj: Tensor         # (T, hidden) encoder side of the attention score
    dec_h: Tensor             # (hidden,) decoder initial hidden state
    dec_c: Tensor             # (hidden,) decoder initial cell state
    length: int


@dataclass
class DecoderStepOutput:
    p_vocab: np.ndarray       # (vocab_size,)
    attention: np.ndarray     # (input length,)
    p_gen: float
    p_final: np.ndarray       # (vocab_size + n_oov,)
    oov_words: list[str] = field(default_factory=list)


def _lstm_step(x: Tensor, h: Tensor, c: Tensor, W: Tensor, b: Tensor,
               hidden: int) -> tuple[Tensor, Tensor]:
    z = ad.add(ad.matmul(W, ad.concat([x, h])), b)
    gates = ad.sigmoid(ad.narrow(z, 0, 3 * hidden))   # i, f, o in one pass
    i = ad.narrow(gates, 0, hidden)
    f = ad.narrow(gates, hidden, hidden)
    o = ad.narrow(gates, 2 * hidden, hidden)
    g = ad.tanh(ad.narrow(z, 3 * hidden, hidden))
    c_new = ad.add(ad.mul(f, c), ad.mul(i, g))
    h_new = ad.mul(o, ad.tanh(c_new))
    return h_new, c_new


def encode(input_ids: list[int], params: ModelParams,
           config: ModelConfig) -> EncoderStates:
    """Run the bidirectional encoder over a token-id sequence."""
    n = len(input_ids)
    if n == 0:
        raise ValueError("encode: empty input")
    if n > config.max_input_len:
        raise ValueError(f"encode: input length {n} exceeds max_input_len")
    if any(i < 0 or i >= config.vocab_size for i in input_ids):
        raise ValueError("encode: token id out of vocabulary range")
    h = config.hidden_size
    embeds = [ad.lookup(params["embed"], i) for i in input_ids]

    zero = Tensor(np.zeros(h))
    fwd, (fh, fc) = [], (zero, zero)
    for x in embeds:
        fh, fc = _lstm_step(x, fh, fc, params["enc_fwd_W"], params["enc_fwd_b"], h)
        fwd.append(fh)
    bwd, (bh, bc) = [None] * n, (zero, zero)
    for t in range(n - 1, -1, -1):
        bh, bc = _lstm_step(embeds[t], bh, bc,
                            params["enc_bwd_W"], params["enc_bwd_b"], h)
        bwd[t] = bh
    states = ad.stack([ad.concat([fwd[t], bwd[t]]) for t in range(n)])
    attn_proj = ad.matmul(states, params["attn_enc_W"])
    final = ad.concat([fh, bh])
    final_c = ad.concat([fc, bc])
    dec_h = ad.tanh(ad.add(ad.matmul(params["reduce_h_W"], final),
                           params["reduce_h_b"]))
    dec_c = ad.tanh(ad.add(ad.matmul(params["reduce_c_W"], final_c),
                           params["reduce_c_b"]))
    return EncoderStates(states=states, attn_proj=attn_proj,
                         dec_h=dec_h, dec_c=dec_c, length=n)


def build_copy_map(input_tokens: list[str],
                   vocab: Vocabulary) -> tuple[np.ndarray, list[str]]:
    """Extended-vocabulary ids per input position.

    In-vocabulary words map to their ids; each unique OOV surface form
    gets a fresh id past the end of the vocabulary, in order of first
    appearance.
    """
    oov_words: list[str] = []
    oov_ids: dict[str, int] = {}
    ext_ids = np.empty(len(input_tokens), dtype=np.intp)
    for pos, word in enumerate(input_tokens):
        if word in vocab:
            ext_ids[pos] = vocab.id_of(word)
        else:
            if word not in oov_ids:
                oov_ids[word] = len(vocab) + len(oov_words)
                oov_words.append(word)
            ext_ids[pos] = oov_ids[word]
    return ext_ids, oov_words


def _step_graph(prev_id: int, h: Tensor, c: Tensor, enc: EncoderStates,
                ext_ids: np.ndarray, n_oov: int, params: ModelParams,
                config: ModelConfig, p_gen_override: float | None = None):
    """One decoder step on the graph; returns all step tensors."""
    hid = config.hidden_size
    x = ad.lookup(params["embed"], prev_id)
    h, c = _lstm_step(x, h, c, params["dec_W"], params["dec_b"], hid)

    dec_term = ad.matmul(h, params["attn_dec_W"])
    scores = ad.matmul(ad.tanh(ad.add(ad.add(enc.attn_proj, dec_term),
                                      params["attn_b"])),
                       params["attn_v"])
    attention = ad.softmax(scores)
    context = ad.matmul(attention, enc.states)

    p_vocab = ad.softmax(ad.add(ad.matmul(params["out_W"],
                                          ad.concat([h, context])),
                                params["out_b"]))
    if p_gen_override is None:
        gate = ad.add(ad.add(ad.matmul(params["gate_ctx_w"], context),
                             ad.matmul(params["gate_state_w"], h)),
                      ad.add(ad.matmul(params["gate_in_w"], x),
                             params["gate_b"]))
        p_gen = ad.sigmoid(gate)
    else:
        p_gen = ad.const(float(p_gen_override))

    gen = ad.mul(p_vocab, p_gen)
    if n_oov:
        gen = ad.concat([gen, Tensor(np.zeros(n_oov))])
    copy = ad.scatter_add(ad.mul(attention, ad.sub(ad.const(1.0), p_gen)),
                          ext_ids, config.vocab_size + n_oov)
    p_final = ad.add(gen, copy)
    return p_final, p_vocab, attention, p_gen, h, c


def decode_step(prev_token_id: int, decoder_state: tuple[Tensor, Tensor],
                encoder_states: EncoderStates, input_tokens: list[str],
                params: ModelParams, config: ModelConfig, vocab: Vocabulary,
                p_gen_override: float | None = None
                ) -> tuple[DecoderStepOutput, tuple[Tensor, Tensor]]:
    """One decoding step producing the mixed copy/generate distribution."""
    if len(input_tokens) != encoder_states.length:
        raise ValueError("decode_step: input_tokens misaligned with encoder states")
    ext_ids, oov_words = build_copy_map(input_tokens, vocab)
    h, c = decoder_state
    p_final, p_vocab, attention, p_gen, h, c = _step_graph(
        prev_token_id, h, c, encoder_states, ext_ids, len(oov_words),
        params, config, p_gen_override)
    out = DecoderStepOutput(
        p_vocab=p_vocab.data.copy(), attention=attention.data.copy(),
        p_gen=float(p_gen.data), p_final=p_final.data.copy(),
        oov_words=oov_words)
    return out, (h, c)


def mixture(p_vocab: dict[str, float], input_tokens: list[str],
            attention: list[float], p_gen: float) -> dict[str, float]:
    """Reference form of the copy/generate mixture over surface words.

    Pure dictionary arithmetic, independent of the graph implementation;
    exists so the mixture formula can be checked by hand.
    """
    out = {w: p_gen * p for w, p in p_vocab.items()}
    for word, a in zip(input_tokens, attention):
        out[word] = out.get(word, 0.0) + (1.0 - p_gen) * a
    return out


def _input_ids(input_tokens: list[str], vocab: Vocabulary) -> list[int]:
    return [vocab.id_of(w) for w in input_tokens]


def _target_ids(ref_tokens: list[str], vocab: Vocabulary,
                oov_words: list[str]) -> list[int]:
    oov_index = {w: len(vocab) + i for i, w in enumerate(oov_words)}
    ids = []
    for w in ref_tokens:
        if w in vocab:
            ids.append(vocab.id_of(w))
        elif w in oov_index:
            ids.append(oov_index[w])
        else:
            ids.append(UNK_ID)
    return ids + [STOP_ID]


def sequence_loss(input_tokens: list[str], ref_tokens: list[str],
                  params: ModelParams, config: ModelConfig,
                  vocab: Vocabulary) -> Tensor:
    """Mean negative log-likelihood of the reference under the mixture.

    Targets are reference tokens plus the stop token; reference tokens
    outside both the vocabulary and the input map to UNK.  Probabilities
    are floored at 1e-12 before the log.
    """
    if not ref_tokens:
        raise ValueError("sequence_loss: empty reference")
    input_tokens = input_tokens[:config.max_input_len]
    enc = encode(_input_ids(input_tokens, vocab), params, config)
    ext_ids, oov_words = build_copy_map(input_tokens, vocab)
    targets = _target_ids(ref_tokens, vocab, oov_words)
    dec_inputs = [START_ID] + [vocab.id_of(w) for w in ref_tokens]

    h, c = enc.dec_h, enc.dec_c
    log_probs = []
    for prev_id, target in zip(dec_inputs, targets):
        p_final, _, _, _, h, c = _step_graph(
            prev_id, h, c, enc, ext_ids, len(oov_words), params, config)
        p = ad.clip_min(ad.take(p_final, target), 1e-12)
        log_probs.append(ad.log(p))
    total = ad.vsum(ad.stack(log_probs))
    return ad.mul(total, ad.const(-1.0 / len(targets)))


@dataclass
class DecodeResult:
    tokens: list[str]
    trace: list[DecoderStepOutput]
    score: float              # accumulated log probability of the hypothesis


def _ext_token(ext_id: int, vocab: Vocabulary, oov_words: list[str]) -> str:
    if ext_id < len(vocab):
        return vocab.word_of(ext_id)
    return oov_words[ext_id - len(vocab)]


def greedy_decode(input_tokens: list[str], params: ModelParams,
                  config: ModelConfig, vocab: Vocabulary) -> DecodeResult:
    """Argmax decoding; ties break to the lowest token id.

    The trace retains one DecoderStepOutput per emitted token for the
    attention analyses.
    """
    input_tokens = input_tokens[:config.max_input_len]
    enc = encode(_input_ids(input_tokens, vocab), params, config)
    ext_ids, oov_words = build_copy_map(input_tokens, vocab)
    n_oov = len(oov_words)
    h, c = enc.dec_h, enc.dec_c
    prev = START_ID
    tokens: list[str] = []
    trace: list[DecoderStepOutput] = []
    score = 0.0
    for _ in range(config.max_decode_len):
        p_final, p_vocab, attention, p_gen, h, c = _step_graph(
            prev, h, c, enc, ext_ids, n_oov, params, config)
        choice = int(np.argmax(p_final.data))
        score += float(np.log(max(p_final.data[choice], 1e-12)))
        if choice == STOP_ID:
            break
        tokens.append(_ext_token(choice, vocab, oov_words))
        trace.append(DecoderStepOutput(
            p_vocab=p_vocab.data.copy(), attention=attention.data.copy(),
            p_gen=float(p_gen.data), p_final=p_final.data.copy(),
            oov_words=oov_words))
        prev = choice if choice < len(vocab) else UNK_ID
    return DecodeResult(tokens=tokens, trace=trace, score=score)


@dataclass
class _Hypothesis:
    ids: tuple[int, ...]
    score: float
    h: Tensor
    c: Tensor
    trace: tuple
    done: bool = False


def beam_decode(input_tokens: list[str], params: ModelParams,
                config: ModelConfig, vocab: Vocabulary,
                beam_width: int) -> DecodeResult:
    """Beam search over accumulated log probability.

    Width 1 reproduces greedy decoding exactly, including its tie-break.
    Hypotheses finish on the stop token or at max_decode_len; the best
    finished hypothesis by total log probability wins, ties breaking to
    the lexicographically smallest id sequence.
    """
    if beam_width < 1:
        raise ValueError("beam_decode: beam_width must be at least 1")
    input_tokens = input_tokens[:config.max_input_len]
    enc = encode(_input_ids(input_tokens, vocab), params, config)
    ext_ids, oov_words = build_copy_map(input_tokens, vocab)
    n_oov = len(oov_words)

    beam = [_Hypothesis(ids=(), score=0.0, h=enc.dec_h, c=enc.dec_c, trace=())]
    finished: list[_Hypothesis] = []
    for _ in range(config.max_decode_len):
        candidates: list[_Hypothesis] = []
        for hyp in beam:
            prev = UNK_ID if hyp.ids and hyp.ids[-1] >= len(vocab) else \
                (hyp.ids[-1] if hyp.ids else START_ID)
            p_final, p_vocab, attention, p_gen, h, c = _step_graph(
                prev, hyp.h, hyp.c, enc, ext_ids, n_oov, params, config)
            logp = np.log(np.maximum(p_final.data, 1e-12))
            top = np.argsort(-logp, kind="stable")[:beam_width]
            step_out = DecoderStepOutput(
                p_vocab=p_vocab.data.copy(), attention=attention.data.copy(),
                p_gen=float(p_gen.data), p_final=p_final.data.copy(),
                oov_words=oov_words)
            for tok in top:
                tok = int(tok)
                cand = _Hypothesis(
                    ids=hyp.ids + (tok,), score=hyp.score + float(logp[tok]),
                    h=h, c=c, trace=hyp.trace + (step_out,))
                if tok == STOP_ID:
                    cand.done = True
                    finished.append(cand)
                else:
                    candidates.append(cand)
        if not candidates:
            break
        candidates.sort(key=lambda hy: (-hy.score, hy.ids))
        beam = candidates[:beam_width]
    finished.extend(beam)  # hypotheses cut off at max_decode_len
    best = min(finished, key=lambda hy: (-hy.score, hy.ids))
    emitted = [i for i in best.ids if i != STOP_ID]
    return DecodeResult(
        tokens=[_ext_token(i, vocab, oov_words) for i in emitted],
        trace=[st for i, st in zip(best.ids, best.trace) if i != STOP_ID],
        score=best.score)

"""Incremental encoder, scorer bundle and log-distribution helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import BLANK, EOS, Chunk, JointScoreWeights, Vocab

NEG_INF = -math.inf


@dataclass(frozen=True, eq=False)
class EncoderState:
    """Streaming encoder state.

    ``hidden`` holds one vector per ``r`` consumed frames. While the stream is
    open a state is emitted only once ``lookahead`` further frames exist, so
    ``len(hidden) == max(0, (consumed_frames - lookahead) // r)``. Emitted
    states are never revised. ``cache`` memoises per-state scorer work and is
    local to the session that owns the state.
    """

    r: int
    lookahead: int
    dim: int
    hidden: np.ndarray
    buffer: np.ndarray
    consumed_frames: int = 0
    next_chunk: int = 1
    finished: bool = False
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_states(self) -> int:
        return self.hidden.shape[0]

    def frame_span(self, s: int) -> tuple[int, int]:
        """Frame range ``[start, end)`` pooled into hidden state ``s``."""
        start = s * self.r
        return start, min(start + self.r, self.consumed_frames)


@dataclass(frozen=True)
class MeanPoolEncoder:
    """Toy stand-in for the convolutional front-end: averages ``r`` frames per state."""

    def init_state(self, r: int, lookahead: int, dim: int) -> EncoderState:
        if r <= 0 or lookahead < 0:
            raise ValueError("invalid encoder parameters")
        return EncoderState(r, lookahead, dim, np.zeros((0, dim)), np.zeros((0, dim)))

    def _emit(self, state: EncoderState, target: int, **changes):
        new = max(0, target - state.num_states)
        r = state.r
        buf = changes.pop("buffer")
        rows = [buf[i * r:(i + 1) * r].mean(axis=0) for i in range(new)]
        fresh = np.array(rows).reshape(new, state.dim)
        hidden = np.vstack([state.hidden, fresh])
        # cache entries are keyed by state count, so they stay valid as the state grows
        nxt = EncoderState(state.r, state.lookahead, state.dim, hidden, buf[new * r:],
                           cache=state.cache, **changes)
        return nxt, fresh

    def encode_chunk(self, state: EncoderState, chunk: Chunk):
        """Consume one chunk; returns ``(new_state, new_hidden_states)``."""
        if state.finished or chunk.index != state.next_chunk:
            raise ValueError("non-monotonic stream")
        frames = chunk.valid_frames
        if frames.shape[1] != state.dim:
            raise ValueError("frame dimension changed within a session")
        buf = np.vstack([state.buffer, frames])
        consumed = state.consumed_frames + frames.shape[0]
        target = max(0, (consumed - state.lookahead) // state.r)
        return self._emit(state, target, buffer=buf, consumed_frames=consumed,
                          next_chunk=state.next_chunk + 1)

    def flush(self, state: EncoderState):
        """End of stream: emit every withheld state, the last one possibly partial."""
        target = -(-state.consumed_frames // state.r)
        return self._emit(state, target, buffer=state.buffer, consumed_frames=state.consumed_frames,
                          next_chunk=state.next_chunk, finished=True)


def support_mask(vocab: Vocab, *, eos: bool = False, blank: bool = False) -> np.ndarray:
    mask = np.zeros(len(vocab), dtype=bool)
    mask[list(vocab.regular_ids)] = True
    mask[EOS] = eos
    mask[BLANK] = blank
    return mask


def flat(mask: np.ndarray) -> np.ndarray:
    out = np.full(mask.shape, NEG_INF)
    out[mask] = -math.log(mask.sum())
    return out


def peaked(mask: np.ndarray, target: int, eps: float) -> np.ndarray:
    """1 - eps on ``target``, eps spread evenly over the rest of the support."""
    n = int(mask.sum())
    if not mask[target]:
        raise ValueError("peak target outside the support")
    if n == 1:
        out = np.full(mask.shape, NEG_INF)
        out[target] = 0.0
        return out
    out = np.full(mask.shape, NEG_INF)
    out[mask] = math.log(eps / (n - 1))
    out[target] = math.log1p(-eps)
    return out


def mix(mask: np.ndarray, probs: np.ndarray, eps: float) -> np.ndarray:
    """Log of ``(1 - eps) * probs + eps * uniform`` over the support."""
    p = (1.0 - eps) * probs + eps * mask / mask.sum()
    with np.errstate(divide="ignore"):
        return np.where(mask, np.log(p), NEG_INF)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    z = x - m
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


@dataclass
class ScorerBundle:
    """Encoder plus the four scorers that read it.

    ``asr_att``, ``ctc`` and ``st`` all consume the same :class:`EncoderState`;
    the ST decoder never sees ASR hypotheses.
    """

    encoder: Any
    asr_att: Any
    ctc: Any
    lm: Any
    st: Any
    src_vocab: Vocab
    tgt_vocab: Vocab
    weights: JointScoreWeights = field(default_factory=JointScoreWeights)

    def init_state(self, r: int, lookahead: int, dim: int) -> EncoderState:
        return self.encoder.init_state(r, lookahead, dim)

    def encode_chunk(self, state: EncoderState, chunk: Chunk):
        return self.encoder.encode_chunk(state, chunk)

    def flush(self, state: EncoderState):
        return self.encoder.flush(state)

    def asr_att_logdist(self, state: EncoderState, prefix) -> np.ndarray:
        return self.asr_att.asr_att_logdist(state, tuple(prefix))

    def ctc_frame_posteriors(self, state: EncoderState, from_step: int, to_step: int) -> np.ndarray:
        if not 0 <= from_step <= to_step or to_step > state.num_states:
            raise ValueError("state not yet available")
        return self.ctc.ctc_frame_posteriors(state, from_step, to_step)

    def lm_logdist(self, prefix) -> np.ndarray:
        return self.lm.lm_logdist(tuple(prefix))

    def st_logdist(self, state: EncoderState, target_prefix) -> np.ndarray:
        return self.st.st_logdist(state, tuple(target_prefix))

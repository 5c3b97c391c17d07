"""Nearest-prototype toy acoustic model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import BLANK, EOS, Vocab
from .base import EncoderState, flat, log_softmax, mix, peaked, support_mask
from .translation import TranslationRule, st_distribution


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    token: int
    probs: np.ndarray  # over the regular source tokens


class PrototypeScorer:
    """Scores hidden states by Gaussian distance to per-token prototypes.

    CTC posteriors come from single states, with the silence prototype acting
    as blank. The attention and ST decoders work on segments: runs of states
    with the same nearest prototype, where isolated one-state runs inside the
    utterance are absorbed into their left neighbour and each run is
    re-classified from its pooled vector. Pooling over a segment is what gives
    the attention decoder information the per-state CTC head lacks.

    With ``source_prior = (start, transitions)`` the ST decoder reads the
    segments jointly, taking the most likely token sequence under that bigram
    prior instead of each segment's own argmax. Later segments can then
    overturn the reading of earlier ones, so the ST benefits from right
    context beyond the next token.
    """

    def __init__(self, prototypes, silence, noise: float, rule: TranslationRule,
                 src_vocab: Vocab, tgt_vocab: Vocab, epsilon: float = 0.05, min_var: float = 0.05,
                 source_prior=None, prior_floor: float = 0.01):
        self.prototypes = np.asarray(prototypes, dtype=np.float64)
        self.silence = np.asarray(silence, dtype=np.float64)
        if self.prototypes.shape[0] != len(src_vocab.regular_ids):
            raise ValueError("one prototype per regular source token is required")
        self.noise = float(noise)
        self.rule = rule
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.epsilon = epsilon
        self.min_var = min_var
        self._offset = src_vocab.regular_ids.start
        self._ctc_mask = support_mask(src_vocab, blank=True)
        self._att_mask = support_mask(src_vocab, eos=True)
        # row 0 is the blank / silence prototype
        self._centres = np.vstack([self.silence, self.prototypes])
        self._log_start = self._log_trans = None
        if source_prior is not None:
            start, trans = (np.asarray(x, dtype=np.float64) for x in source_prior)
            v = start.shape[0]
            with np.errstate(divide="ignore"):
                self._log_start = np.log((1 - prior_floor) * start + prior_floor / v)
                self._log_trans = np.log((1 - prior_floor) * trans + prior_floor / v)

    def _var(self, state: EncoderState, pooled: int = 1) -> float:
        return max(self.noise ** 2 / (state.r * pooled), self.min_var)

    def _loglik(self, state: EncoderState, h: np.ndarray, pooled: int = 1) -> np.ndarray:
        d2 = ((h[:, None, :] - self._centres[None, :, :]) ** 2).sum(axis=-1)
        return -d2 / (2.0 * self._var(state, pooled))

    def _state_scores(self, state: EncoderState) -> np.ndarray:
        cached = state.cache.get("proto_loglik")
        n = state.num_states
        if cached is None or cached.shape[0] < n:
            have = 0 if cached is None else cached.shape[0]
            fresh = self._loglik(state, state.hidden[have:n])
            cached = fresh if cached is None else np.vstack([cached, fresh])
            state.cache["proto_loglik"] = cached
        return cached[:n]

    def ctc_frame_posteriors(self, state: EncoderState, from_step: int, to_step: int) -> np.ndarray:
        ll = self._state_scores(state)[from_step:to_step]
        probs = np.exp(log_softmax(ll))
        full = np.zeros((ll.shape[0], len(self.src_vocab)))
        full[:, BLANK] = probs[:, 0]
        full[:, self._offset:] = probs[:, 1:]
        return np.array([mix(self._ctc_mask, row, self.epsilon) for row in full]).reshape(full.shape)

    def segments(self, state: EncoderState) -> list[Segment]:
        key = ("proto_segments", state.num_states)
        if key in state.cache:
            return state.cache[key]
        labels = np.argmax(self._state_scores(state), axis=1)
        runs = []
        for s, lab in enumerate(labels):
            if runs and runs[-1][0] == lab:
                runs[-1][2] = s + 1
            else:
                runs.append([lab, s, s + 1])
        smoothed = []
        for i, (lab, start, end) in enumerate(runs):
            if smoothed and end - start == 1 and i < len(runs) - 1:
                lab = smoothed[-1][0]
            if smoothed and smoothed[-1][0] == lab:
                smoothed[-1][2] = end
            else:
                smoothed.append([lab, start, end])
        segs = []
        for lab, start, end in smoothed:
            if lab == 0:
                continue
            pooled = state.hidden[start:end].mean(axis=0, keepdims=True)
            ll = self._loglik(state, pooled, pooled=end - start)[0, 1:]
            probs = np.exp(log_softmax(ll))
            token = int(np.argmax(probs)) + self._offset
            if segs and segs[-1].end == start and segs[-1].token == token:
                prev = segs.pop()
                pooled = state.hidden[prev.start:end].mean(axis=0, keepdims=True)
                ll = self._loglik(state, pooled, pooled=end - prev.start)[0, 1:]
                probs = np.exp(log_softmax(ll))
                start = prev.start
            segs.append(Segment(start, end, token, probs))
        state.cache[key] = segs
        return segs

    def heard(self, state: EncoderState) -> list[int]:
        return [seg.token for seg in self.segments(state)]

    def st_heard(self, state: EncoderState) -> list[int]:
        """Source tokens as read by the ST decoder."""
        if self._log_start is None:
            return self.heard(state)
        key = ("proto_st_heard", state.num_states)
        if key not in state.cache:
            state.cache[key] = self._viterbi(self.segments(state))
        return state.cache[key]

    def _viterbi(self, segs: list[Segment]) -> list[int]:
        if not segs:
            return []
        with np.errstate(divide="ignore"):
            emit = [np.log(seg.probs) for seg in segs]
        score = self._log_start + emit[0]
        back = []
        for e in emit[1:]:
            cand = score[:, None] + self._log_trans
            back.append(np.argmax(cand, axis=0))
            score = cand.max(axis=0) + e
        path = [int(np.argmax(score))]
        for bp in reversed(back):
            path.append(int(bp[path[-1]]))
        return [p + self._offset for p in reversed(path)]

    def asr_att_logdist(self, state: EncoderState, prefix) -> np.ndarray:
        segs = self.segments(state)
        pos = len(prefix)
        if pos < len(segs):
            probs = np.zeros(len(self.src_vocab))
            probs[self._offset:] = segs[pos].probs
            return mix(self._att_mask, probs, self.epsilon)
        if state.finished:
            return peaked(self._att_mask, EOS, self.epsilon)
        return flat(self._att_mask)

    def st_logdist(self, state: EncoderState, target_prefix) -> np.ndarray:
        return st_distribution(self.rule, self.tgt_vocab, self.st_heard(state), state.finished,
                               len(target_prefix), self.epsilon)

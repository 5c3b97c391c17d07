"""Tabular oracle: peaked distributions read off a known frame alignment."""

from __future__ import annotations

import numpy as np

from ..core import BLANK, EOS, Vocab, collapse
from .base import EncoderState, flat, peaked, support_mask
from .translation import TranslationRule, st_distribution


class TabularOracleScorer:
    """ASR attention, CTC and ST scorer for one utterance with known alignment.

    ``frame_labels[i]`` is the source token id spoken in frame ``i`` or
    ``BLANK`` for silence. Each hidden state takes the label of the centre
    frame it pools. Every distribution puts ``1 - epsilon`` on the truth as far
    as the observed states reveal it.
    """

    def __init__(self, frame_labels, rule: TranslationRule, src_vocab: Vocab, tgt_vocab: Vocab,
                 epsilon: float = 0.05):
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        self.frame_labels = np.asarray(frame_labels, dtype=np.int64)
        self.rule = rule
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.epsilon = epsilon
        self._ctc_mask = support_mask(src_vocab, blank=True)
        self._att_mask = support_mask(src_vocab, eos=True)

    def state_labels(self, state: EncoderState) -> np.ndarray:
        labels = np.empty(state.num_states, dtype=np.int64)
        for s in range(state.num_states):
            start, end = state.frame_span(s)
            labels[s] = self.frame_labels[start + (end - start) // 2]
        return labels

    def heard(self, state: EncoderState) -> list[int]:
        key = ("oracle_heard", state.num_states)
        if key not in state.cache:
            state.cache[key] = collapse(self.state_labels(state), BLANK)
        return state.cache[key]

    def ctc_frame_posteriors(self, state: EncoderState, from_step: int, to_step: int) -> np.ndarray:
        labels = self.state_labels(state)[from_step:to_step]
        return np.array([peaked(self._ctc_mask, int(lab), self.epsilon) for lab in labels]).reshape(
            len(labels), len(self.src_vocab))

    def asr_att_logdist(self, state: EncoderState, prefix) -> np.ndarray:
        heard = self.heard(state)
        pos = len(prefix)
        if pos < len(heard):
            return peaked(self._att_mask, heard[pos], self.epsilon)
        if state.finished:
            return peaked(self._att_mask, EOS, self.epsilon)
        return flat(self._att_mask)

    def st_logdist(self, state: EncoderState, target_prefix) -> np.ndarray:
        return st_distribution(self.rule, self.tgt_vocab, self.heard(state), state.finished,
                               len(target_prefix), self.epsilon)

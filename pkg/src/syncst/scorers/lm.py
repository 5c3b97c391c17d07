"""Prefix language models used for shallow fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import EOS, Vocab
from .base import flat, support_mask


@dataclass(frozen=True)
class UniformLM:
    vocab: Vocab

    def lm_logdist(self, prefix) -> np.ndarray:
        return flat(support_mask(self.vocab, eos=True))


class BigramLM:
    """Smoothed bigram over regular tokens with a constant end-of-sentence rate.

    ``start`` and each row of ``transitions`` are distributions over the
    regular tokens in vocabulary order.
    """

    def __init__(self, vocab: Vocab, start, transitions, eos_prob: float = 0.1, floor: float = 0.01):
        self.vocab = vocab
        n = len(vocab.regular_ids)
        self.start = np.asarray(start, dtype=np.float64)
        self.transitions = np.asarray(transitions, dtype=np.float64)
        if self.start.shape != (n,) or self.transitions.shape != (n, n):
            raise ValueError("bigram tables do not match the vocabulary")
        if not 0.0 < eos_prob < 1.0 or not 0.0 <= floor < 1.0:
            raise ValueError("eos_prob must lie in (0, 1) and floor in [0, 1)")
        self.eos_prob = eos_prob
        self.floor = floor
        self._offset = vocab.regular_ids.start
        mask = support_mask(vocab, eos=True)
        rows = np.vstack([self.start, self.transitions])
        rows = (1.0 - floor) * rows + floor / n
        self._table = np.full((n + 1, len(vocab)), -math.inf)
        self._table[:, self._offset:] = np.log((1.0 - eos_prob) * rows)
        self._table[:, EOS] = math.log(eos_prob)
        self._table[:, ~mask] = -math.inf

    def lm_logdist(self, prefix) -> np.ndarray:
        if not prefix:
            return self._table[0].copy()
        return self._table[1 + prefix[-1] - self._offset].copy()

"""Frame-synchronous streaming ASR beam search with joint CTC/attention/LM scoring.

At every encoder step each hypothesis either stays (the step is explained by
blank or by repeating its last label) or grows by one token. A hypothesis'
CTC component is the exact-labeling log-probability of the steps seen so far,
so the joint score of a prefix does not depend on the step at which each
token was appended.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import EOS, Beam, Hypothesis, JointScoreWeights, rank_key
from .ctc_prefix import PrefixScorer
from .scorers.base import EncoderState, ScorerBundle


@dataclass(frozen=True)
class BeamSearchConfig:
    b: int = 5
    weights: JointScoreWeights | None = None
    max_prefix_len: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("beam width must be at least 1")
        if self.max_prefix_len is not None and self.max_prefix_len < 0:
            raise ValueError("max_prefix_len must be non-negative")


def top_b(candidates: Iterable[Hypothesis], b: int, step_index: int = 0) -> Beam:
    """Keep the ``b`` best distinct prefixes; equal scores fall back to token order."""
    best: dict[tuple[int, ...], Hypothesis] = {}
    for hyp in candidates:
        kept = best.get(hyp.prefix)
        if kept is None or hyp.score > kept.score:
            best[hyp.prefix] = hyp
    if not best:
        raise ValueError("no candidates to prune")
    ranked = sorted(best.values(), key=rank_key)[:b]
    return Beam(tuple(ranked), step_index)


class StreamingASR:
    """Session-local beam search over a growing encoder state.

    Feed encoder states with :meth:`observe`, then call :meth:`advance_chunk`
    to run one expansion-and-prune round per newly available state.
    """

    def __init__(self, bundle: ScorerBundle, config: BeamSearchConfig | None = None):
        self.bundle = bundle
        self.config = config or BeamSearchConfig()
        self.weights = self.config.weights or bundle.weights
        self.vocab = bundle.src_vocab
        self.prefix_scorer = PrefixScorer(len(self.vocab))
        self._regular = np.asarray(self.vocab.regular_ids, dtype=np.int64)
        self._cols = np.searchsorted(self.prefix_scorer.candidates, self._regular)
        self.enc: EncoderState | None = None
        self.beam = Beam.initial()
        self.candidates_scored = 0

    @property
    def available_steps(self) -> int:
        return self.prefix_scorer.steps

    def observe(self, enc: EncoderState) -> None:
        """Pull CTC posteriors for any hidden states not seen yet."""
        have = self.prefix_scorer.steps
        if enc.num_states > have:
            self.prefix_scorer.add_posteriors(self.bundle.ctc_frame_posteriors(enc, have, enc.num_states))
        self.enc = enc

    def _expand(self, hyp: Hypothesis, j: int, final: bool, limit: int | None) -> list[Hypothesis]:
        w = self.weights
        steps = j + 1
        z = hyp.prefix
        ctc_stay = self.prefix_scorer.state(z, steps).log_prob(steps)
        out = [Hypothesis(z, w.combine(ctc_stay, hyp.att, hyp.lm), ctc_stay, hyp.att, hyp.lm)]
        need_ext = self.config.max_prefix_len is None or len(z) < self.config.max_prefix_len
        if not (final or need_ext):
            return out
        att = self.bundle.asr_att_logdist(self.enc, z)
        lm = self.bundle.lm_logdist(z)
        if final:
            a, m = hyp.att + att[EOS], hyp.lm + lm[EOS]
            out.append(Hypothesis(z + (EOS,), w.combine(ctc_stay, a, m), ctc_stay, a, m))
        if not need_ext:
            return out
        _, alpha, _ = self.prefix_scorer.children(z, steps)
        alpha = alpha[self._cols]
        att_c = hyp.att + att[self._regular]
        lm_c = hyp.lm + lm[self._regular]
        scores = np.zeros(alpha.shape)
        for lam, part in ((w.lambda_ctc, alpha), (w.lambda_att, att_c), (w.lambda_lm, lm_c)):
            if lam:
                scores += lam * part
        order = np.lexsort((self._regular, -scores))
        if limit is not None:
            order = order[:limit]
        for i in order:
            out.append(Hypothesis(z + (int(self._regular[i]),), float(scores[i]),
                                  float(alpha[i]), float(att_c[i]), float(lm_c[i])))
        return out

    def next_candidates(self, beam: Beam, j: int, final: bool = False,
                        limit: int | None = None) -> list[Hypothesis]:
        """Expand every hypothesis of ``beam`` with encoder step ``j`` (0-based).

        Each live hypothesis yields a stay candidate and one extension per
        regular token; at the final step of a finished stream it also yields
        an end-of-sentence candidate. Hypotheses already ending in EOS are
        carried over unchanged. ``limit`` keeps only the best extensions per
        hypothesis, which cannot change the result of :func:`top_b` with
        ``b <= limit``.
        """
        if j >= self.prefix_scorer.steps or self.enc is None:
            raise ValueError("state not yet available")
        out = []
        for hyp in beam:
            if hyp.ended:
                out.append(hyp)
            else:
                out.extend(self._expand(hyp, j, final, limit))
        self.candidates_scored += len(out)
        return out

    def step(self, final: bool = False) -> Beam:
        j = self.beam.step_index
        cands = self.next_candidates(self.beam, j, final, limit=self.config.b)
        self.beam = top_b(cands, self.config.b, j + 1)
        return self.beam

    def advance_chunk(self, final: bool = False) -> list[Beam]:
        """Run one round per available encoder state not yet searched.

        Returns the beam after each round. With ``final`` the last round also
        admits end-of-sentence candidates.
        """
        beams = []
        last = self.prefix_scorer.steps - 1
        while self.beam.step_index <= last:
            beams.append(self.step(final and self.beam.step_index == last))
        return beams

    def result(self) -> Hypothesis:
        """Best finished hypothesis, or the best one if none has ended."""
        for hyp in self.beam:
            if hyp.ended:
                return hyp
        return self.beam.best


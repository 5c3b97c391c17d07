"""The toy translation task shared by the corpus generator and the ST decoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import EOS, Vocab
from .base import flat, peaked, support_mask


@dataclass(frozen=True)
class TranslationRule:
    """Bijective lexicon plus left-to-right reordering after trigger tokens.

    ``triggers`` maps a source token to its span: the token's translation is
    emitted after the translations of the next ``span`` tokens. With span 1
    this swaps adjacent pairs. Reordered groups do not overlap.
    """

    lexicon: dict[int, int]
    triggers: dict[int, int]

    def __post_init__(self):
        if not isinstance(self.triggers, dict):
            object.__setattr__(self, "triggers", {int(t): 1 for t in self.triggers})
        if any(span < 1 for span in self.triggers.values()):
            raise ValueError("reorder spans must be at least 1")

    def translate(self, src, complete: bool = True) -> list[int]:
        """Target ids for ``src``.

        With ``complete=False`` the output stops before a trigger whose
        group has not been fully heard yet.
        """
        out = []
        i = 0
        while i < len(src):
            tok = src[i]
            span = self.triggers.get(tok, 0)
            if span:
                if i + span < len(src):
                    out += [self.lexicon[s] for s in src[i + 1:i + 1 + span]] + [self.lexicon[tok]]
                    i += span + 1
                    continue
                if not complete:
                    break
                # too close to the end: the group is shorter
                out += [self.lexicon[s] for s in src[i + 1:]] + [self.lexicon[tok]]
                break
            out.append(self.lexicon[tok])
            i += 1
        return out

    def to_json(self) -> dict:
        return {"lexicon": [[int(s), int(t)] for s, t in sorted(self.lexicon.items())],
                "triggers": [[int(t), int(n)] for t, n in sorted(self.triggers.items())]}

    @classmethod
    def from_json(cls, obj: dict) -> "TranslationRule":
        triggers = {}
        for item in obj["triggers"]:
            tok, span = (item, 1) if isinstance(item, int) else item
            triggers[int(tok)] = int(span)
        return cls({int(s): int(t) for s, t in obj["lexicon"]}, triggers)


def st_distribution(rule: TranslationRule, tgt_vocab: Vocab, heard, finished: bool,
                    position: int, eps: float) -> np.ndarray:
    """Next-token log-distribution of a toy ST decoder.

    ``heard`` is the decoder's own reading of the source tokens in the encoder
    states. When the needed source is missing the decoder falls back to a
    monotone guess, then to a flat distribution; EOS is only possible once the
    stream is finished.
    """
    mask = support_mask(tgt_vocab, eos=finished)
    known = rule.translate(heard, complete=finished)
    if position < len(known):
        return peaked(mask, known[position], eps)
    if finished:
        return peaked(mask, EOS, eps)
    if position < len(heard):
        return peaked(mask, rule.lexicon[heard[position]], eps)
    return flat(mask)

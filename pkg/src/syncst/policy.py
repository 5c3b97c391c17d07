"""Valid-token counting policies over an ASR beam and the wait-k trigger."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .core import Beam


class PolicyKind(str, enum.Enum):
    LCP = "lcp"
    SH = "sh"


def _token_seqs(beam: Beam):
    if not len(beam):
        raise ValueError("empty beam")
    return [h.tokens for h in beam]


def phi_lcp(beam: Beam) -> int:
    """Length of the prefix shared by every hypothesis (EOS not counted)."""
    seqs = _token_seqs(beam)
    n = 0
    for column in zip(*seqs):
        if any(tok != column[0] for tok in column):
            break
        n += 1
    return n


def phi_sh(beam: Beam) -> int:
    """Length of the shortest hypothesis (EOS not counted)."""
    return min(len(s) for s in _token_seqs(beam))


def phi(beam: Beam, policy: PolicyKind | str) -> int:
    return phi_lcp(beam) if PolicyKind(policy) is PolicyKind.LCP else phi_sh(beam)


def should_commit(phi_value: int, k: float, t: int) -> bool:
    """Wait-k trigger: commit target token ``t + 1`` once ``phi - k >= t``."""
    if phi_value < 0 or t < 0:
        raise ValueError("phi and t must be non-negative")
    if math.isinf(k):
        return False
    if k < 1:
        raise ValueError("k must be at least 1")
    return phi_value - k >= t


@dataclass
class MonotoneEnvelope:
    """Running maximum of a raw phi trajectory.

    Pruning can shrink LCP or SH from one step to the next; the envelope is
    what drives commits, and ``divergences`` counts the steps where the raw
    value fell below it.
    """

    value: int = 0
    divergences: int = 0
    history: list = field(default_factory=list)

    def update(self, raw: int) -> int:
        if raw < self.value:
            self.divergences += 1
        self.value = max(self.value, raw)
        self.history.append((raw, self.value))
        return self.value

"""Shared domain types: frames, chunks, vocabularies, hypotheses and beams.

All scores are natural-log probabilities. One feature frame stands for 10 ms
of simulated audio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FRAME_MS = 10

BLANK = 0
BOS = 1
EOS = 2
UNK = 3
SPECIALS = ("<blank>", "<s>", "</s>", "<unk>")


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending setting."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class FeatureFrame:
    values: np.ndarray
    index: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature frame contains non-finite values")


@dataclass(frozen=True)
class Chunk:
    """A fixed-size streaming unit of ``w`` frames.

    ``frames`` always has ``w`` rows; the final chunk of a stream may be
    zero-padded, in which case only the first ``valid`` rows are speech.
    """

    frames: np.ndarray
    index: int
    arrival_ms: int
    valid: int

    @property
    def size(self) -> int:
        return self.frames.shape[0]

    @property
    def valid_frames(self) -> np.ndarray:
        return self.frames[: self.valid]


def as_frame_array(frames) -> np.ndarray:
    """Stack a sequence of FeatureFrame (or a 2-D array) into ``[n, d]``."""
    if isinstance(frames, np.ndarray):
        arr = np.asarray(frames, dtype=np.float64)
    else:
        frames = list(frames)
        if frames and isinstance(frames[0], FeatureFrame):
            arr = np.stack([f.values for f in frames]).astype(np.float64)
        else:
            arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("frames must be a 2-D array of shape [n, d]")
    return arr


def make_chunks(frames, w: int) -> list[Chunk]:
    """Split a frame stream into chunks of ``w`` frames.

    Chunk ``i`` (1-based) arrives at ``i * w * 10`` ms. The last chunk is
    zero-padded to ``w`` rows and records how many rows are real.
    """
    if not isinstance(w, (int, np.integer)) or w <= 0:
        raise ValueError("invalid chunk size")
    arr = as_frame_array(frames)
    n, d = arr.shape
    if n == 0:
        raise ValueError("empty stream")
    chunks = []
    for i, start in enumerate(range(0, n, w), start=1):
        part = arr[start : start + w]
        valid = part.shape[0]
        if valid < w:
            part = np.vstack([part, np.zeros((w - valid, d))])
        chunks.append(Chunk(part, i, i * w * FRAME_MS, valid))
    return chunks


def steps_per_chunk(w: int, r: int) -> int:
    if w <= 0 or r <= 0:
        raise ValueError("chunk size and downsampling rate must be positive")
    if w % r:
        raise ValueError("chunk size not divisible by downsampling rate")
    return w // r


def tau(j: int, r: int, w: int) -> int:
    """Number of chunks observable at ASR step ``j``: ceil(j * r / w)."""
    if j < 0:
        raise ValueError("step index must be non-negative")
    return -(-j * r // w)


@dataclass(frozen=True)
class Vocab:
    """Token inventory with the four reserved ids first.

    ``<blank>`` is 0, ``<s>`` 1, ``</s>`` 2, ``<unk>`` 3; regular tokens follow.
    """

    tokens: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the reserved tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})

    @classmethod
    def build(cls, regular: Iterable[str]) -> "Vocab":
        return cls(SPECIALS + tuple(regular))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def regular_ids(self) -> range:
        return range(len(SPECIALS), len(self.tokens))

    def id(self, token: str) -> int:
        return self._index.get(token, UNK)

    def token(self, idx: int) -> str:
        return self.tokens[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


@dataclass(frozen=True)
class JointScoreWeights:
    """Interpolation weights for CTC, attention decoder and shallow-fusion LM."""

    lambda_ctc: float = 0.3
    lambda_att: float = 0.7
    lambda_lm: float = 0.3

    def __post_init__(self):
        if min(self.lambda_ctc, self.lambda_att, self.lambda_lm) < 0:
            raise ValueError("joint score weights must be non-negative")
        if abs(self.lambda_ctc + self.lambda_att - 1.0) > 1e-9:
            raise ValueError("lambda_ctc + lambda_att must equal 1")

    @classmethod
    def no_lm(cls) -> "JointScoreWeights":
        return cls(0.3, 0.7, 0.0)

    @classmethod
    def ctc_only(cls) -> "JointScoreWeights":
        return cls(1.0, 0.0, 0.0)

    def combine(self, ctc: float, att: float, lm: float) -> float:
        # a zero weight switches a scorer off, including its -inf entries
        total = 0.0
        for lam, value in ((self.lambda_ctc, ctc), (self.lambda_att, att), (self.lambda_lm, lm)):
            if lam:
                total += lam * value
        return total


@dataclass(frozen=True)
class Hypothesis:
    """An ASR prefix with its accumulated joint score.

    ``ctc`` is the log-probability that the frames seen so far collapse to
    exactly ``prefix``; ``att`` and ``lm`` are summed token log-probabilities.
    """

    prefix: tuple[int, ...]
    score: float
    ctc: float = 0.0
    att: float = 0.0
    lm: float = 0.0

    @property
    def ended(self) -> bool:
        return bool(self.prefix) and self.prefix[-1] == EOS

    @property
    def tokens(self) -> tuple[int, ...]:
        """Prefix without a trailing end-of-sentence marker."""
        return self.prefix[:-1] if self.ended else self.prefix

    def __len__(self) -> int:
        return len(self.tokens)


def rank_key(hyp: Hypothesis):
    """Sort key: score descending, then token ids ascending."""
    return (-hyp.score, hyp.prefix)


@dataclass(frozen=True)
class Beam:
    hypotheses: tuple[Hypothesis, ...]
    step_index: int = 0

    def __post_init__(self):
        if not self.hypotheses:
            raise ValueError("a beam must hold at least one hypothesis")

    @classmethod
    def initial(cls) -> "Beam":
        return cls((Hypothesis((), 0.0),), 0)

    @property
    def best(self) -> Hypothesis:
        return self.hypotheses[0]

    @property
    def prefixes(self) -> list[tuple[int, ...]]:
        return [h.prefix for h in self.hypotheses]

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def is_sorted(self) -> bool:
        keys = [rank_key(h) for h in self.hypotheses]
        return all(a <= b for a, b in zip(keys, keys[1:]))


def logsumexp(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    m = np.max(x)
    if m == -math.inf:
        return -math.inf
    return float(m + np.log(np.sum(np.exp(x - m))))


def collapse(labels: Sequence[int], blank: int = BLANK) -> list[int]:
    """CTC collapse: merge repeats, then drop blanks."""
    out = []
    prev = None
    for lab in labels:
        if lab != prev and lab != blank:
            out.append(int(lab))
        prev = lab
    return out

"""CTC prefix scoring in log space.

For a prefix ``h`` the state keeps, per encoder step ``t``, the log-probability
that the first ``t + 1`` steps collapse to exactly ``h`` and end in a non-blank
(``log_gn``) or a blank (``log_gb``) label. With ``z`` the parent of
``h = z + (c,)`` and ``p_t`` the step posteriors::

    phi[t-1]  = gb[t-1](z) + (c != last(z)) * gn[t-1](z)
    gn[t](h)  = p_t(c)     * (gn[t-1](h) + phi[t-1])
    gb[t](h)  = p_t(blank) * (gb[t-1](h) + gn[t-1](h))
    psi(h)    = sum_t p_t(c) * phi[t-1]

``psi`` is the probability that the collapsed labeling begins with ``h``; the
exact-labeling probability is ``gn[-1] + gb[-1]``. Before the first step the
empty prefix has probability one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import BLANK, collapse

NEG_INF = -math.inf


@dataclass
class PrefixScoreState:
    prefix: tuple[int, ...]
    log_gn: np.ndarray
    log_gb: np.ndarray
    log_psi: float

    @property
    def steps(self) -> int:
        return self.log_gn.shape[0]

    @property
    def last(self) -> int | None:
        return self.prefix[-1] if self.prefix else None

    def log_prob(self, steps: int | None = None) -> float:
        """Log-probability that the first ``steps`` steps collapse to exactly the prefix."""
        n = self.steps if steps is None else steps
        if n > self.steps:
            raise ValueError("state does not cover the requested steps")
        if n == 0:
            return 0.0 if not self.prefix else NEG_INF
        return float(np.logaddexp(self.log_gn[n - 1], self.log_gb[n - 1]))


def _check_posteriors(posteriors) -> np.ndarray:
    post = np.asarray(posteriors, dtype=np.float64)
    if post.ndim != 2:
        raise ValueError("posteriors must be a [steps, vocab] array of log-probabilities")
    return post


def initial_state(posteriors, blank: int = BLANK) -> PrefixScoreState:
    """State of the empty prefix over all given steps."""
    post = _check_posteriors(posteriors)
    gb = np.cumsum(post[:, blank])
    gn = np.full(post.shape[0], NEG_INF)
    return PrefixScoreState((), gn, gb, 0.0)


def _parent_phi(parent: PrefixScoreState, cs: np.ndarray, t: int) -> np.ndarray:
    """log phi[t] of ``parent`` for each candidate in ``cs``; t may be -1."""
    if t < 0:
        return np.full(cs.shape, 0.0 if not parent.prefix else NEG_INF)
    both = np.logaddexp(parent.log_gb[t], parent.log_gn[t])
    if parent.last is None:
        return np.full(cs.shape, both)
    return np.where(cs == parent.last, parent.log_gb[t], both)


def _extend_block(parent, post, cs, blank, gn, gb, psi, start):
    """Fill rows ``start..len(post)-1`` of the child arrays in place; returns psi."""
    xs = post[:, cs]
    for t in range(start, post.shape[0]):
        phi = _parent_phi(parent, cs, t - 1)
        if t == 0:
            prev_n = prev_b = np.full(cs.shape, NEG_INF)
        else:
            prev_n, prev_b = gn[t - 1], gb[t - 1]
        gn[t] = xs[t] + np.logaddexp(prev_n, phi)
        gb[t] = post[t, blank] + np.logaddexp(prev_b, prev_n)
        psi = np.logaddexp(psi, xs[t] + phi)
    return psi


def prefix_extend_scores(state: PrefixScoreState, posteriors, cs, blank: int = BLANK):
    """Vectorised :func:`prefix_extend_score` over candidate tokens ``cs``.

    Returns ``(log_psi[C], log_gn[J, C], log_gb[J, C])`` with ``J`` the number
    of posterior rows. The parent state must cover at least ``J - 1`` steps.
    """
    post = _check_posteriors(posteriors)
    cs = np.asarray(cs, dtype=np.int64)
    if np.any(cs == blank):
        raise ValueError("blank is not a prefix token")
    n = post.shape[0]
    if state.steps < n - 1:
        raise ValueError("parent state does not cover the observed steps")
    gn = np.full((n, cs.size), NEG_INF)
    gb = np.full((n, cs.size), NEG_INF)
    psi = _extend_block(state, post, cs, blank, gn, gb, np.full(cs.shape, NEG_INF), 0)
    return psi, gn, gb


def prefix_extend_score(state: PrefixScoreState, posteriors, c: int, blank: int = BLANK):
    """Score the one-token extension ``state.prefix + (c,)``.

    Returns the log prefix probability of the extension over all posterior
    rows, and the extension's own state covering those rows.
    """
    if c == blank:
        raise ValueError("blank is not a prefix token")
    psi, gn, gb = prefix_extend_scores(state, posteriors, [c], blank)
    child = PrefixScoreState(state.prefix + (c,), gn[:, 0].copy(), gb[:, 0].copy(), float(psi[0]))
    return float(psi[0]), child


def advance_state(state: PrefixScoreState, parent: PrefixScoreState | None, posteriors,
                  blank: int = BLANK) -> PrefixScoreState:
    """Extend ``state`` to cover every posterior row without recomputing old steps.

    ``parent`` is the state of ``state.prefix[:-1]`` and must cover at least
    ``len(posteriors) - 1`` steps; it is ignored for the empty prefix.
    """
    post = _check_posteriors(posteriors)
    n, start = post.shape[0], state.steps
    if n < start:
        raise ValueError("posteriors cover fewer steps than the state")
    if not state.prefix:
        tail = np.cumsum(post[start:, blank]) + (state.log_gb[-1] if start else 0.0)
        gb = np.concatenate([state.log_gb, tail])
        return PrefixScoreState((), np.full(n, NEG_INF), gb, 0.0)
    if parent is None or parent.prefix != state.prefix[:-1]:
        raise ValueError("advance_state needs the parent prefix state")
    if parent.steps < n - 1:
        raise ValueError("parent state does not cover the observed steps")
    cs = np.array([state.prefix[-1]], dtype=np.int64)
    gn = np.full((n, 1), NEG_INF)
    gb = np.full((n, 1), NEG_INF)
    gn[:start, 0] = state.log_gn
    gb[:start, 0] = state.log_gb
    psi = _extend_block(parent, post, cs, blank, gn, gb, np.array([state.log_psi]), start)
    return PrefixScoreState(state.prefix, gn[:, 0], gb[:, 0], float(psi[0]))


class PrefixScorer:
    """Session cache of prefix states over a growing posterior matrix.

    States are keyed by prefix and extended lazily, so a hypothesis that stays
    in the beam costs one recursion step per new encoder step.
    """

    def __init__(self, vocab_size: int, blank: int = BLANK):
        self.blank = blank
        self.vocab_size = vocab_size
        self._post = np.zeros((0, vocab_size))
        self._states: dict[tuple[int, ...], PrefixScoreState] = {}
        self._blocks: dict[tuple[int, ...], list] = {}
        self._cs = np.array([v for v in range(vocab_size) if v != blank], dtype=np.int64)

    @property
    def steps(self) -> int:
        return self._post.shape[0]

    @property
    def candidates(self) -> np.ndarray:
        """Token ids scored by :meth:`children` (every id except blank)."""
        return self._cs

    def add_posteriors(self, rows) -> None:
        rows = np.asarray(rows, dtype=np.float64).reshape(-1, self.vocab_size)
        self._post = np.vstack([self._post, rows])

    def state(self, prefix: tuple[int, ...], steps: int) -> PrefixScoreState:
        """State of ``prefix`` covering at least ``steps`` steps."""
        if steps > self.steps:
            raise ValueError("state not yet available")
        st = self._states.get(prefix)
        if st is not None and st.steps >= steps:
            return st
        if not prefix:
            st = initial_state(self._post[:steps], self.blank)
        else:
            parent = self.state(prefix[:-1], max(steps - 1, 0))
            if st is None:
                st = self._from_block(prefix)
            if st is None:
                st = PrefixScoreState(prefix, np.zeros(0), np.zeros(0), NEG_INF)
            st = advance_state(st, parent, self._post[:steps], self.blank)
        self._states[prefix] = st
        return st

    def _from_block(self, prefix):
        block = self._blocks.get(prefix[:-1])
        if block is None:
            return None
        psi, gn, gb = block
        col = int(np.searchsorted(self._cs, prefix[-1]))
        return PrefixScoreState(prefix, gn[:, col].copy(), gb[:, col].copy(), float(psi[col]))

    def children(self, prefix: tuple[int, ...], steps: int):
        """Exact log-probabilities after ``steps`` steps of every one-token extension.

        Returns ``(token_ids, log_alpha, log_psi)``.
        """
        parent = self.state(prefix, max(steps - 1, 0))
        post = self._post[:steps]
        block = self._blocks.get(prefix)
        if block is None:
            psi, gn, gb = prefix_extend_scores(parent, post, self._cs, self.blank)
        else:
            psi, gn0, gb0 = block
            start = gn0.shape[0]
            if start < steps:
                gn = np.vstack([gn0, np.full((steps - start, self._cs.size), NEG_INF)])
                gb = np.vstack([gb0, np.full((steps - start, self._cs.size), NEG_INF)])
                psi = _extend_block(parent, post, self._cs, self.blank, gn, gb, psi, start)
            else:
                gn, gb = gn0, gb0
        self._blocks[prefix] = [psi, gn, gb]
        if steps == 0:
            alpha = np.full(self._cs.shape, NEG_INF)
        else:
            alpha = np.logaddexp(gn[steps - 1], gb[steps - 1])
        return self._cs, alpha, psi


def _enumerate_collapses(posteriors, blank: int):
    post = _check_posteriors(posteriors)
    steps, k = post.shape
    if k > 6 or steps > 8:
        raise ValueError("oracle limit exceeded")
    probs = np.exp(post)
    for path in itertools.product(range(k), repeat=steps):
        p = 1.0
        for t, lab in enumerate(path):
            p *= probs[t, lab]
        if p > 0.0:
            yield tuple(collapse(path, blank)), p


def brute_force_prefix_prob(posteriors, prefix, blank: int = BLANK) -> float:
    """Probability that the collapsed labeling begins with ``prefix``.

    Enumerates every alignment, so it is limited to at most 5 non-blank
    labels and 8 steps.
    """
    prefix = tuple(prefix)
    n = len(prefix)
    return float(sum(p for lab, p in _enumerate_collapses(posteriors, blank) if lab[:n] == prefix))


def brute_force_exact_prob(posteriors, labeling, blank: int = BLANK) -> float:
    """Probability that the collapsed labeling equals ``labeling`` exactly."""
    labeling = tuple(labeling)
    return float(sum(p for lab, p in _enumerate_collapses(posteriors, blank) if lab == labeling))

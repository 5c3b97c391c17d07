"""Brute-force reference suites behind ``oracle-check`` and the acceptance tests.

Each suite draws seeded random instances, solves them once with the engine
and once by enumeration, and reports the worst disagreement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BLANK, EOS, Beam, Hypothesis, JointScoreWeights, Vocab, make_chunks
from .ctc_prefix import PrefixScorer, brute_force_exact_prob, brute_force_prefix_prob
from .policy import phi_lcp, phi_sh
from .scorers.base import MeanPoolEncoder, ScorerBundle, log_softmax, support_mask
from .streaming_asr import BeamSearchConfig, StreamingASR


@dataclass
class SuiteResult:
    name: str
    n: int
    failures: list = field(default_factory=list)
    max_error: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"suite": self.name, "instances": self.n, "passed": self.passed,
                "failures": len(self.failures), "max_error": self.max_error}


def random_posteriors(rng, steps: int, n_labels: int, sharpness: float = 1.0) -> np.ndarray:
    """``[steps, n_labels]`` log-posteriors; column 0 is blank."""
    return np.log(rng.dirichlet(np.full(n_labels, sharpness), size=steps))


def ctc_suite(n: int = 500, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    """Incremental prefix and exact-labeling scores against alignment enumeration.

    Posteriors arrive in random slices, as they would from a stream, and the
    comparison is made in probability space.
    """
    rng = np.random.default_rng(seed)
    res = SuiteResult("ctc_prefix", n)
    for i in range(n):
        v = int(rng.integers(1, 5))
        steps = int(rng.integers(1, 7))
        post = random_posteriors(rng, steps, v + 1, sharpness=float(rng.choice([0.3, 1.0, 3.0])))
        scorer = PrefixScorer(v + 1)
        cuts = sorted(rng.choice(np.arange(1, steps), size=int(rng.integers(0, steps)), replace=False)) \
            if steps > 1 else []
        for a, b in zip([0, *cuts], [*cuts, steps]):
            scorer.add_posteriors(post[a:b])
        length = int(rng.integers(0, min(steps, 4) + 1))
        prefix = tuple(int(x) for x in rng.integers(1, v + 1, size=length))
        st = scorer.state(prefix, steps)
        got_alpha = math.exp(st.log_prob(steps))
        want_alpha = brute_force_exact_prob(post, prefix)
        err = abs(got_alpha - want_alpha)
        if prefix:
            got_psi = math.exp(st.log_psi)
            want_psi = brute_force_prefix_prob(post, prefix)
            err = max(err, abs(got_psi - want_psi))
        res.max_error = float(max(res.max_error, err))
        if err > tol:
            res.failures.append({"instance": i, "prefix": prefix, "error": err})
    return res


class RandomTableScorer:
    """Attention and LM scores drawn per prefix from a seeded generator.

    Scores depend on the prefix only, so the joint score of a hypothesis is
    the same whichever step each token was appended at, and an exhaustive
    search over prefixes is a valid oracle for the streaming beam.
    """

    def __init__(self, vocab: Vocab, ctc_table: np.ndarray, seed: int):
        self.vocab = vocab
        self.ctc_table = ctc_table
        self.seed = seed
        self._mask = support_mask(vocab, eos=True)

    def _dist(self, tag: int, prefix) -> np.ndarray:
        rng = np.random.default_rng([self.seed, tag, len(prefix), *prefix])
        logits = np.where(self._mask, rng.normal(0.0, 2.0, size=self._mask.shape), -np.inf)
        return log_softmax(logits)

    def asr_att_logdist(self, state, prefix) -> np.ndarray:
        return self._dist(1, prefix)

    def lm_logdist(self, prefix) -> np.ndarray:
        return self._dist(2, prefix)

    def ctc_frame_posteriors(self, state, from_step, to_step) -> np.ndarray:
        return self.ctc_table[from_step:to_step]

    def st_logdist(self, state, target_prefix) -> np.ndarray:
        return self._dist(3, target_prefix)


def random_beam_instance(rng, v: int, steps: int, weights: JointScoreWeights | None = None):
    """A scorer bundle over ``v`` regular tokens with ``steps`` encoder steps (r = 1)."""
    vocab = Vocab.build(f"v{i}" for i in range(v))
    small = random_posteriors(rng, steps, v + 1, sharpness=float(rng.choice([0.5, 1.0, 2.0])))
    table = np.full((steps, len(vocab)), -np.inf)
    table[:, BLANK] = small[:, 0]
    table[:, list(vocab.regular_ids)] = small[:, 1:]
    scorer = RandomTableScorer(vocab, table, int(rng.integers(2**31)))
    return ScorerBundle(MeanPoolEncoder(), scorer, scorer, scorer, scorer, vocab, vocab,
                        weights or JointScoreWeights())


def exhaustive_best(bundle: ScorerBundle, steps: int) -> Hypothesis:
    """Best hypothesis over every prefix reachable in ``steps`` final steps.

    CTC terms come from alignment enumeration, not from the prefix DP.
    """
    vocab = bundle.src_vocab
    w = bundle.weights
    regular = list(vocab.regular_ids)
    cols = [BLANK, *regular]
    small = bundle.ctc.ctc_table[:steps][:, cols]
    relabel = {tok: i + 1 for i, tok in enumerate(regular)}
    best = None
    for length in range(steps + 1):
        for z in itertools.product(regular, repeat=length):
            p = brute_force_exact_prob(small, [relabel[t] for t in z])
            ctc = math.log(p) if p > 0 else -math.inf
            att = lm = 0.0
            for i, tok in enumerate(z):
                att += bundle.asr_att_logdist(None, z[:i])[tok]
                lm += bundle.lm_logdist(z[:i])[tok]
            cands = [Hypothesis(z, w.combine(ctc, att, lm), ctc, att, lm)]
            if length < steps:
                a = att + bundle.asr_att_logdist(None, z)[EOS]
                m = lm + bundle.lm_logdist(z)[EOS]
                cands.append(Hypothesis(z + (EOS,), w.combine(ctc, a, m), ctc, a, m))
            for h in cands:
                if best is None or (-h.score, h.prefix) < (-best.score, best.prefix):
                    best = h
    return best


def stream_beam(bundle: ScorerBundle, steps: int, w: int, b: int) -> Beam:
    """Run the streaming beam over ``steps`` one-frame states fed ``w`` at a time."""
    frames = np.zeros((steps, 1))
    enc = bundle.init_state(1, 0, 1)
    asr = StreamingASR(bundle, BeamSearchConfig(b=b))
    chunks = make_chunks(frames, w)
    for chunk in chunks:
        enc, _ = bundle.encode_chunk(enc, chunk)
        last = chunk.index == len(chunks)
        if last:
            enc, _ = bundle.flush(enc)
        asr.observe(enc)
        asr.advance_chunk(final=last)
    return asr.beam


def beam_suite(n: int = 100, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    """Streaming beam with ``b >= (|V| + 1) ** j`` against exhaustive search."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("beam_exhaustive", n)
    for i in range(n):
        v = int(rng.integers(1, 4))
        steps = int(rng.integers(1, 6))
        weights = [JointScoreWeights(), JointScoreWeights.no_lm(), JointScoreWeights.ctc_only()][i % 3]
        bundle = random_beam_instance(rng, v, steps, weights)
        w = int(rng.integers(1, steps + 1))
        got = stream_beam(bundle, steps, w, b=(v + 1) ** steps).best
        want = exhaustive_best(bundle, steps)
        err = abs(got.score - want.score)
        res.max_error = float(max(res.max_error, err))
        if got.prefix != want.prefix or err > tol:
            res.failures.append({"instance": i, "beam": got.prefix, "exhaustive": want.prefix, "error": err})
    return res


def random_beam(rng, v: int = 4, max_len: int = 8, max_b: int = 6) -> Beam:
    """A beam of hypotheses sharing a random stem, as pruning tends to produce."""
    b = int(rng.integers(1, max_b + 1))
    stem = [int(x) for x in rng.integers(4, 4 + v, size=int(rng.integers(0, max_len + 1)))]
    hyps = []
    for _ in range(b):
        cut = int(rng.integers(0, len(stem) + 1))
        tail = [int(x) for x in rng.integers(4, 4 + v, size=int(rng.integers(0, 4)))]
        prefix = stem[:cut] + tail
        if rng.random() < 0.2:
            prefix.append(EOS)
        hyps.append(Hypothesis(tuple(prefix), float(rng.normal())))
    uniq = {h.prefix: h for h in hyps}
    return Beam(tuple(sorted(uniq.values(), key=lambda h: (-h.score, h.prefix))))


def _lcp_oracle(beam: Beam) -> int:
    seqs = [h.tokens for h in beam]
    best = min(len(s) for s in seqs)
    for a in seqs:
        for b in seqs:
            n = 0
            while n < min(len(a), len(b)) and a[n] == b[n]:
                n += 1
            best = min(best, n)
    return best


def policy_suite(n: int = 1000, seed: int = 0) -> SuiteResult:
    """LCP against a pairwise oracle, SH against a min-length oracle, and LCP <= SH."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("policy_laws", n)
    for i in range(n):
        beam = random_beam(rng)
        lcp, sh = phi_lcp(beam), phi_sh(beam)
        ok = lcp == _lcp_oracle(beam) and sh == min(len(h.tokens) for h in beam) and lcp <= sh
        if not ok:
            res.failures.append({"instance": i, "lcp": lcp, "sh": sh})
    return res


SUITES = {"ctc": ctc_suite, "beam": beam_suite, "policy": policy_suite}


def run_all(seed: int = 0) -> list[SuiteResult]:
    return [fn(seed=seed) for fn in SUITES.values()]

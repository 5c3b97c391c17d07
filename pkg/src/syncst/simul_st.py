"""Wait-k translation driven by a streaming ASR beam.

Each arriving chunk is encoded once; the ASR beam search advances over the
new encoder states; then, while the policy's valid-token count is at least
``k`` ahead of the committed translation, the ST decoder commits one more
greedy token. The ST decoder reads only the encoder state and its own prefix.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import EOS, FRAME_MS, Beam, ConfigError, JointScoreWeights, as_frame_array, make_chunks, \
    steps_per_chunk
from .policy import MonotoneEnvelope, PolicyKind, phi_lcp, phi_sh, should_commit
from .scorers.base import EncoderState, ScorerBundle
from .streaming_asr import BeamSearchConfig, StreamingASR
from .trace import AsrStep, ChunkArrival, Commit, SessionTrace, StreamEnd, fmt_score

TIMING_MODES = ("model", "wall", "off")


@dataclass(frozen=True)
class CostModel:
    """Deterministic stand-in for compute time, in milliseconds per operation."""

    per_state: float = 0.05
    per_candidate: float = 0.002
    per_st_step: float = 0.1


@dataclass(frozen=True)
class SessionConfig:
    k: float = 3
    policy: PolicyKind = PolicyKind.SH
    w: int = 48
    r: int = 4
    b: int = 5
    weights: JointScoreWeights = field(default_factory=JointScoreWeights)
    lookahead: int = 10
    alpha: float = 1.5
    beta: int = 10
    seed: int = 0
    timing: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind(self.policy))
        if not (math.isinf(self.k) and self.k > 0) and not (float(self.k).is_integer() and self.k >= 1):
            raise ConfigError("k", "must be a positive integer or inf")
        if not math.isinf(self.k):
            object.__setattr__(self, "k", int(self.k))
        for name in ("w", "r", "b"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.w % self.r:
            raise ConfigError("w", "chunk size not divisible by downsampling rate")
        if self.lookahead < 0:
            raise ConfigError("lookahead", "must be non-negative")
        if not self.alpha > 0:
            raise ConfigError("alpha", "must be positive")
        if self.beta < 0:
            raise ConfigError("beta", "must be non-negative")
        if self.timing not in TIMING_MODES:
            raise ConfigError("timing", f"must be one of {', '.join(TIMING_MODES)}")

    def to_json(self) -> dict:
        w = self.weights
        return {
            "k": "inf" if math.isinf(self.k) else self.k,
            "policy": self.policy.value, "w": self.w, "r": self.r, "b": self.b,
            "lookahead": self.lookahead, "alpha": self.alpha, "beta": self.beta,
            "weights": {"ctc": w.lambda_ctc, "att": w.lambda_att, "lm": w.lambda_lm},
            "seed": self.seed, "timing": self.timing,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SessionConfig":
        obj = dict(obj)
        if obj.get("k") == "inf":
            obj["k"] = math.inf
        if isinstance(obj.get("weights"), dict):
            w = obj["weights"]
            obj["weights"] = JointScoreWeights(w["ctc"], w["att"], w["lm"])
        return cls(**obj)


def target_cap(phi_final: int, alpha: float, beta: int) -> int:
    return math.ceil(alpha * phi_final) + beta


def st_step(bundle: ScorerBundle, enc: EncoderState, target_prefix, cap: int | None = None) -> int:
    """Greedy next target token; EOS once ``cap`` tokens exist."""
    if cap is not None and len(target_prefix) >= cap:
        return EOS
    return int(np.argmax(bundle.st_logdist(enc, target_prefix)))


def _snapshot(beam: Beam, vocab) -> list[dict]:
    return [{"prefix": list(h.prefix), "text": " ".join(vocab.decode(h.prefix)),
             "score": fmt_score(h.score), "ctc": fmt_score(h.ctc), "att": fmt_score(h.att),
             "lm": fmt_score(h.lm)} for h in beam]


class _Clock:
    """Compute-time accounting for one session."""

    def __init__(self, mode: str, cost: CostModel):
        self.mode = mode
        self.cost = cost
        self.total = 0.0
        self._t0 = 0.0

    def start(self):
        self._t0 = time.perf_counter()

    def stop(self, states: int = 0, candidates: int = 0, st_steps: int = 0) -> float:
        if self.mode == "wall":
            spent = (time.perf_counter() - self._t0) * 1000.0
        elif self.mode == "model":
            c = self.cost
            spent = states * c.per_state + candidates * c.per_candidate + st_steps * c.per_st_step
        else:
            spent = 0.0
        spent = round(spent, 6)
        self.total = round(self.total + spent, 6)
        return spent


def run_session(config: SessionConfig, frames, bundle: ScorerBundle, *, utt_id: str = "utt",
                asr_view: Callable[[Beam], Beam] | None = None,
                cost: CostModel | None = None) -> SessionTrace:
    """Simulate one streaming session and return its trace.

    ``asr_view`` transforms each beam before the policies read it; tests use
    it to corrupt token identities and show the translation does not move.
    """
    arr = as_frame_array(frames)
    steps_per_chunk(config.w, config.r)
    chunks = make_chunks(arr, config.w)
    n_frames = arr.shape[0]
    total_ms = n_frames * FRAME_MS
    tgt = bundle.tgt_vocab
    src = bundle.src_vocab

    enc = bundle.init_state(config.r, config.lookahead, arr.shape[1])
    asr = StreamingASR(bundle, BeamSearchConfig(config.b, config.weights, seed=config.seed))
    env = {PolicyKind.LCP: MonotoneEnvelope(), PolicyKind.SH: MonotoneEnvelope()}
    clock = _Clock(config.timing, cost or CostModel())
    header = {"utt_id": utt_id, "config": config.to_json(), "total_source_ms": total_ms,
              "n_frames": n_frames}
    trace = SessionTrace(header)
    committed: list[int] = []
    ended = False

    def commit(phase: str, now: int, token: int):
        committed.append(token)
        trace.events.append(Commit(
            t=len(committed), token=token, text=tgt.token(token), phase=phase, time_ms=now,
            source_consumed_ms=min(enc.consumed_frames * FRAME_MS, total_ms),
            chunks_consumed=enc.next_chunk - 1, states_consumed=enc.num_states,
            wall_compute_ms=clock.total))

    for chunk in chunks:
        last = chunk.index == len(chunks)
        clock.start()
        before_states, before_cands = enc.num_states, asr.candidates_scored
        enc, _ = bundle.encode_chunk(enc, chunk)
        if last:
            enc, _ = bundle.flush(enc)
        asr.observe(enc)
        beams = asr.advance_chunk(final=last)
        spent = clock.stop(enc.num_states - before_states, asr.candidates_scored - before_cands)
        now = chunk.arrival_ms
        trace.events.append(ChunkArrival(chunk.index, now, chunk.valid, enc.num_states - before_states, spent))

        for beam in beams:
            view = asr_view(beam) if asr_view else beam
            raw = {PolicyKind.LCP: phi_lcp(view), PolicyKind.SH: phi_sh(view)}
            for kind in env:
                env[kind].update(raw[kind])
            trace.events.append(AsrStep(
                j=beam.step_index, time_ms=now, chunk=chunk.index, beam=_snapshot(view, src),
                phi_lcp_raw=raw[PolicyKind.LCP], phi_sh_raw=raw[PolicyKind.SH],
                phi_lcp=env[PolicyKind.LCP].value, phi_sh=env[PolicyKind.SH].value))

        while not ended and should_commit(env[config.policy].value, config.k, len(committed)):
            clock.start()
            token = st_step(bundle, enc, committed)
            clock.stop(st_steps=1)
            if token == EOS:
                ended = True
                break
            commit("stream", now, token)

    end_ms = chunks[-1].arrival_ms
    trace.events.append(StreamEnd(end_ms, total_ms))
    final = asr.result()
    cap = target_cap(len(final), config.alpha, config.beta)
    while not ended:
        clock.start()
        token = st_step(bundle, enc, committed, cap)
        clock.stop(st_steps=1)
        if token == EOS:
            break
        commit("tail", end_ms, token)

    trace.summary = {
        "hypothesis": list(committed), "hypothesis_text": tgt.decode(committed),
        "transcript": list(final.tokens), "transcript_text": src.decode(final.tokens),
        "total_source_ms": total_ms, "target_cap": cap,
        "phi_divergences": {k.value: env[k].divergences for k in (PolicyKind.LCP, PolicyKind.SH)},
        "candidates_scored": asr.candidates_scored, "compute_ms": clock.total,
    }
    return trace


def run_offline(frames, bundle: ScorerBundle, config: SessionConfig | None = None):
    """Full-sentence decoding: encode everything, beam-search ASR, greedy ST.

    Returns ``(transcript, translation)`` as token-id lists.
    """
    config = config or SessionConfig()
    arr = as_frame_array(frames)
    if arr.shape[0] == 0:
        return [], []
    enc = bundle.init_state(config.r, config.lookahead, arr.shape[1])
    # the same chunking as a session, so encoder states match bit for bit
    for chunk in make_chunks(arr, config.w):
        enc, _ = bundle.encode_chunk(enc, chunk)
    enc, _ = bundle.flush(enc)
    asr = StreamingASR(bundle, BeamSearchConfig(config.b, config.weights, seed=config.seed))
    asr.observe(enc)
    asr.advance_chunk(final=True)
    transcript = list(asr.result().tokens)
    cap = target_cap(len(transcript), config.alpha, config.beta)
    translation: list[int] = []
    while True:
        token = st_step(bundle, enc, translation, cap)
        if token == EOS:
            break
        translation.append(token)
    return transcript, translation

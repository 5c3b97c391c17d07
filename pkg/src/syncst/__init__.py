"""Streaming simultaneous speech translation driven by a streaming ASR beam."""

from .core import (BLANK, BOS, EOS, UNK, Beam, Chunk, ConfigError, FeatureFrame, Hypothesis,
                   JointScoreWeights, Vocab, make_chunks, steps_per_chunk, tau)
from .policy import PolicyKind, phi_lcp, phi_sh, should_commit
from .simul_st import SessionConfig, run_offline, run_session, st_step
from .streaming_asr import BeamSearchConfig, StreamingASR, top_b
from .trace import SessionTrace

__all__ = [
    "BLANK", "BOS", "EOS", "UNK", "Beam", "BeamSearchConfig", "Chunk", "ConfigError", "FeatureFrame",
    "Hypothesis", "JointScoreWeights", "PolicyKind", "SessionConfig", "SessionTrace", "StreamingASR",
    "Vocab", "make_chunks", "phi_lcp", "phi_sh", "run_offline", "run_session", "should_commit",
    "st_step", "steps_per_chunk", "tau", "top_b",
]

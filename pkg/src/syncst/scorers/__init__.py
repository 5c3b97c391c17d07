from ..core import JointScoreWeights
from .base import (EncoderState, MeanPoolEncoder, ScorerBundle, flat, log_softmax, mix, peaked,
                   support_mask)
from .lm import BigramLM, UniformLM
from .model import ToyModel
from .oracle import TabularOracleScorer
from .prototype import PrototypeScorer, Segment
from .translation import TranslationRule, st_distribution

__all__ = [
    "BigramLM", "EncoderState", "JointScoreWeights", "MeanPoolEncoder", "PrototypeScorer",
    "ScorerBundle", "Segment", "TabularOracleScorer", "ToyModel", "TranslationRule", "UniformLM",
    "flat", "log_softmax", "mix", "peaked", "st_distribution", "support_mask",
]

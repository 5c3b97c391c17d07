"""Toy model parameters and their JSON model file.

Schema (``model_version`` 1)::

    {
      "model_version": 1,
      "source_tokens": ["s00", ...],        regular source tokens, in id order
      "target_tokens": ["t00", ...],        regular target tokens, in id order
      "prototypes": [[float, ...], ...],    one vector per source token
      "silence": [float, ...],              the blank / silence vector
      "noise": float,                       per-dimension frame noise sigma
      "rule": {"lexicon": [[src_id, tgt_id], ...], "triggers": [[src_id, span], ...]},
      "bigram": {"start": [...], "transitions": [[...], ...],
                 "eos_prob": float, "floor": float},
      "epsilon": float,
      "seed": int
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import JointScoreWeights, Vocab
from .base import MeanPoolEncoder, ScorerBundle
from .lm import BigramLM, UniformLM
from .oracle import TabularOracleScorer
from .prototype import PrototypeScorer
from .translation import TranslationRule

MODEL_VERSION = 1


@dataclass
class ToyModel:
    src_vocab: Vocab
    tgt_vocab: Vocab
    prototypes: np.ndarray
    silence: np.ndarray
    noise: float
    rule: TranslationRule
    bigram_start: np.ndarray
    bigram_transitions: np.ndarray
    eos_prob: float = 0.1
    lm_floor: float = 0.01
    epsilon: float = 0.05
    seed: int = 0

    @property
    def frame_dim(self) -> int:
        return self.prototypes.shape[1]

    def language_model(self, kind: str = "bigram"):
        if kind == "uniform":
            return UniformLM(self.src_vocab)
        if kind == "bigram":
            return BigramLM(self.src_vocab, self.bigram_start, self.bigram_transitions,
                            self.eos_prob, self.lm_floor)
        raise ValueError(f"unknown language model kind {kind!r}")

    def prototype_bundle(self, weights: JointScoreWeights | None = None, lm: str = "bigram") -> ScorerBundle:
        scorer = PrototypeScorer(self.prototypes, self.silence, self.noise, self.rule,
                                 self.src_vocab, self.tgt_vocab, self.epsilon,
                                 source_prior=(self.bigram_start, self.bigram_transitions),
                                 prior_floor=self.lm_floor)
        return ScorerBundle(MeanPoolEncoder(), scorer, scorer, self.language_model(lm), scorer,
                            self.src_vocab, self.tgt_vocab, weights or JointScoreWeights())

    def oracle_bundle(self, frame_labels, weights: JointScoreWeights | None = None,
                      lm: str = "bigram") -> ScorerBundle:
        scorer = TabularOracleScorer(frame_labels, self.rule, self.src_vocab, self.tgt_vocab, self.epsilon)
        return ScorerBundle(MeanPoolEncoder(), scorer, scorer, self.language_model(lm), scorer,
                            self.src_vocab, self.tgt_vocab, weights or JointScoreWeights())

    def bundle(self, kind: str, frame_labels=None, weights=None, lm: str = "bigram") -> ScorerBundle:
        if kind == "prototype":
            return self.prototype_bundle(weights, lm)
        if kind == "oracle":
            if frame_labels is None:
                raise ValueError("the oracle model needs the utterance's frame labels")
            return self.oracle_bundle(frame_labels, weights, lm)
        raise ValueError(f"unknown model kind {kind!r}")

    def to_json(self) -> dict:
        return {
            "model_version": MODEL_VERSION,
            "source_tokens": list(self.src_vocab.tokens[4:]),
            "target_tokens": list(self.tgt_vocab.tokens[4:]),
            "prototypes": self.prototypes.tolist(),
            "silence": self.silence.tolist(),
            "noise": self.noise,
            "rule": self.rule.to_json(),
            "bigram": {"start": self.bigram_start.tolist(),
                       "transitions": self.bigram_transitions.tolist(),
                       "eos_prob": self.eos_prob, "floor": self.lm_floor},
            "epsilon": self.epsilon,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ToyModel":
        if obj.get("model_version") != MODEL_VERSION:
            raise ValueError(f"unsupported model_version {obj.get('model_version')!r}")
        bigram = obj["bigram"]
        return cls(
            src_vocab=Vocab.build(obj["source_tokens"]),
            tgt_vocab=Vocab.build(obj["target_tokens"]),
            prototypes=np.asarray(obj["prototypes"], dtype=np.float64),
            silence=np.asarray(obj["silence"], dtype=np.float64),
            noise=float(obj["noise"]),
            rule=TranslationRule.from_json(obj["rule"]),
            bigram_start=np.asarray(bigram["start"], dtype=np.float64),
            bigram_transitions=np.asarray(bigram["transitions"], dtype=np.float64),
            eos_prob=float(bigram["eos_prob"]),
            lm_floor=float(bigram["floor"]),
            epsilon=float(obj["epsilon"]),
            seed=int(obj["seed"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ToyModel":
        return cls.from_json(json.loads(Path(path).read_text()))

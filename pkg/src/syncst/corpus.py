"""Seeded synthetic corpus: token sequences rendered as noisy frame streams.

Source sentences come from a sparse bigram chain without self-loops, so two
adjacent tokens never collapse into one under CTC. Each token occupies a run
of frames drawn around its prototype vector; optional silences sit between
tokens. The translation is a bijective lexicon map where a trigger token's
translation moves behind the next ``span`` tokens (span 1 by default, an
adjacent swap), which is what makes low ``k`` lose quality.

Files written by :func:`write_corpus` (layouts in ``docs/formats.md``)::

    manifest.json
    model.json
    frames/<utt>.frm            binary frames
    frames/<utt>.labels.json    alignment sidecar
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import BLANK, ConfigError, Vocab
from .scorers.model import ToyModel
from .scorers.translation import TranslationRule

FRAME_MAGIC = b"SFRM"
FRAME_VERSION = 1
FRAME_HEADER = struct.Struct("<4sHHII")
MANIFEST_VERSION = 1
LABELS_VERSION = 1


@dataclass(frozen=True)
class CorpusConfig:
    n_utts: int = 20
    vocab_size: int = 16
    frame_dim: int = 16
    tokens_range: tuple[int, int] = (3, 8)
    duration_range: tuple[int, int] = (12, 24)
    silence_prob: float = 0.2
    silence_range: tuple[int, int] = (8, 24)
    noise: float = 2.5
    reorder_prob: float = 0.25
    reorder_span: tuple[int, int] = (1, 1)
    branching: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("tokens_range", "duration_range", "silence_range", "reorder_span"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (int(lo), int(hi)))
            if lo < 1 or hi < lo:
                raise ConfigError(name, "needs 1 <= min <= max")
        if self.n_utts < 0:
            raise ConfigError("n_utts", "must be non-negative")
        if self.vocab_size < 2:
            raise ConfigError("vocab_size", "must be at least 2")
        if self.frame_dim < 1:
            raise ConfigError("frame_dim", "must be at least 1")
        if not 1 <= self.branching < self.vocab_size:
            raise ConfigError("branching", "must lie in [1, vocab_size - 1]")
        for name in ("silence_prob", "reorder_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(name, "must lie in [0, 1]")
        if self.noise < 0:
            raise ConfigError("noise", "must be non-negative")

    def to_json(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, obj: dict) -> "CorpusConfig":
        known = cls.__dataclass_fields__
        unknown = sorted(set(obj) - set(known))
        if unknown:
            raise ConfigError(unknown[0], "unknown corpus setting")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in obj.items()})


@dataclass
class SyntheticUtterance:
    utt_id: str
    tokens: list[int]                     # source ids
    spans: list[tuple[int, int, int]]     # (start, length, token)
    silences: list[tuple[int, int]]       # (start, length)
    frames: np.ndarray
    frame_labels: np.ndarray
    translation: list[int]                # target ids
    seed: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def total_ms(self) -> int:
        return self.n_frames * 10

    def silence_ms(self) -> list[tuple[int, int]]:
        return [(s * 10, (s + n) * 10) for s, n in self.silences]


@dataclass
class Corpus:
    config: CorpusConfig
    model: ToyModel
    utterances: list[SyntheticUtterance] = field(default_factory=list)

    def references(self) -> list[list[int]]:
        return [u.translation for u in self.utterances]


def _seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def make_model(config: CorpusConfig) -> ToyModel:
    rng = np.random.default_rng(_seed(config.seed, 0))
    v, d = config.vocab_size, config.frame_dim
    src = Vocab.build(f"s{i:02d}" for i in range(v))
    tgt = Vocab.build(f"t{i:02d}" for i in range(v))
    prototypes = rng.normal(0.0, 1.0, size=(v, d))
    silence = np.zeros(d)
    start = rng.dirichlet(np.ones(v))
    trans = np.zeros((v, v))
    for a in range(v):
        succ = rng.choice([b for b in range(v) if b != a], size=config.branching, replace=False)
        trans[a, np.sort(succ)] = rng.dirichlet(np.ones(config.branching))
    perm = rng.permutation(v)
    off = src.regular_ids.start
    lexicon = {off + i: off + int(perm[i]) for i in range(v)}
    n_trig = int(round(config.reorder_prob * v))
    chosen = sorted(int(i) for i in rng.choice(v, size=n_trig, replace=False))
    lo, hi = config.reorder_span
    triggers = {off + i: int(rng.integers(lo, hi + 1)) for i in chosen}
    return ToyModel(src, tgt, prototypes, silence, float(config.noise), TranslationRule(lexicon, triggers),
                    start, trans, seed=config.seed)


def make_utterance(config: CorpusConfig, model: ToyModel, index: int) -> SyntheticUtterance:
    seed = _seed(config.seed, 1, index)
    rng = np.random.default_rng(seed)
    off = model.src_vocab.regular_ids.start
    n_tok = int(rng.integers(config.tokens_range[0], config.tokens_range[1] + 1))
    seq = [int(rng.choice(config.vocab_size, p=model.bigram_start))]
    for _ in range(n_tok - 1):
        seq.append(int(rng.choice(config.vocab_size, p=model.bigram_transitions[seq[-1]])))
    tokens = [off + s for s in seq]

    labels, spans, silences = [], [], []
    for pos, tok in enumerate(tokens):
        if pos and rng.random() < config.silence_prob:
            n = int(rng.integers(config.silence_range[0], config.silence_range[1] + 1))
            silences.append((len(labels), n))
            labels += [BLANK] * n
        n = int(rng.integers(config.duration_range[0], config.duration_range[1] + 1))
        spans.append((len(labels), n, tok))
        labels += [tok] * n
    labels = np.asarray(labels, dtype=np.int64)
    centres = np.vstack([model.silence, model.prototypes])
    rows = np.where(labels == BLANK, 0, labels - off + 1)
    frames = centres[rows] + config.noise * rng.normal(size=(labels.size, config.frame_dim))
    # stored as float32 on disk; quantise here so in-memory and on-disk runs agree
    frames = frames.astype("<f4").astype(np.float64)
    return SyntheticUtterance(f"utt{index:04d}", tokens, spans, silences, frames, labels,
                              model.rule.translate(tokens), seed)


def generate(config: CorpusConfig) -> Corpus:
    model = make_model(config)
    return Corpus(config, model, [make_utterance(config, model, i) for i in range(config.n_utts)])


def write_frames(path, frames: np.ndarray) -> None:
    frames = np.ascontiguousarray(frames, dtype="<f4")
    n, d = frames.shape
    with open(path, "wb") as fh:
        fh.write(FRAME_HEADER.pack(FRAME_MAGIC, FRAME_VERSION, 0, n, d))
        fh.write(frames.tobytes())


def read_frames(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < FRAME_HEADER.size:
        raise ValueError(f"{path}: truncated frame file")
    magic, version, _, n, d = FRAME_HEADER.unpack_from(data)
    if magic != FRAME_MAGIC:
        raise ValueError(f"{path}: not a frame file")
    if version != FRAME_VERSION:
        raise ValueError(f"{path}: unsupported frame file version {version}")
    body = data[FRAME_HEADER.size:]
    if len(body) != 4 * n * d:
        raise ValueError(f"{path}: frame payload size does not match header")
    return np.frombuffer(body, dtype="<f4").reshape(n, d).astype(np.float64)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def write_corpus(corpus: Corpus, out_dir) -> Path:
    """Write frames, sidecars, model and manifest; returns the manifest path."""
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    corpus.model.save(out / "model.json")
    src, tgt = corpus.model.src_vocab, corpus.model.tgt_vocab
    records = []
    for u in corpus.utterances:
        frames_rel, labels_rel = f"frames/{u.utt_id}.frm", f"frames/{u.utt_id}.labels.json"
        write_frames(out / frames_rel, u.frames)
        _dump(out / labels_rel, {
            "labels_version": LABELS_VERSION, "utt_id": u.utt_id,
            "frame_labels": u.frame_labels.tolist(),
            "spans": [{"start": s, "length": n, "token": t} for s, n, t in u.spans],
            "silences": [{"start": s, "length": n} for s, n in u.silences],
        })
        records.append({"id": u.utt_id, "frames": frames_rel, "labels": labels_rel,
                        "n_frames": u.n_frames, "seed": u.seed,
                        "transcript": src.decode(u.tokens), "translation": tgt.decode(u.translation)})
    manifest = out / "manifest.json"
    _dump(manifest, {"manifest_version": MANIFEST_VERSION, "config": corpus.config.to_json(),
                     "model": "model.json", "utterances": records})
    return manifest


def read_corpus(path) -> Corpus:
    """Load a corpus from its directory or manifest path."""
    path = Path(path)
    manifest = path / "manifest.json" if path.is_dir() else path
    root = manifest.parent
    obj = json.loads(manifest.read_text())
    if obj.get("manifest_version") != MANIFEST_VERSION:
        raise ValueError(f"unsupported manifest_version {obj.get('manifest_version')!r}")
    config = CorpusConfig.from_json(obj["config"])
    model = ToyModel.load(root / obj["model"])
    utts = []
    for rec in obj["utterances"]:
        labels = json.loads((root / rec["labels"]).read_text())
        utts.append(SyntheticUtterance(
            rec["id"], model.src_vocab.encode(rec["transcript"]),
            [(s["start"], s["length"], s["token"]) for s in labels["spans"]],
            [(s["start"], s["length"]) for s in labels["silences"]],
            read_frames(root / rec["frames"]), np.asarray(labels["frame_labels"], dtype=np.int64),
            model.tgt_vocab.encode(rec["translation"]), int(rec["seed"])))
    return Corpus(config, model, utts)

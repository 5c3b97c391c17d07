"""Latency and quality metrics computed from session traces.

Average lagging, with ``d_i`` the source milliseconds consumed when target
token ``i`` was committed, ``T`` the source duration and ``|y|`` the
hypothesis length::

    lam     = |y| / T
    tau*    = min{i : d_i >= T}, or |y| if no commit saw the whole source
    AL      = 1/tau* * sum_{i <= tau*} (d_i - (i - 1) / lam)

Average proportion is ``sum(d) / (T * |y|)``. Computation-aware AL uses
``d_i + c_i``, ``c_i`` being the compute time spent up to commit ``i``, with
``tau*`` still taken from the plain delays.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .trace import SessionTrace


def lagging(delays, total_ms: float, tau_delays=None) -> float:
    """AL over explicit delays. ``tau_delays`` picks the cut-off (defaults to ``delays``)."""
    d = np.asarray(delays, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty hypothesis")
    if total_ms <= 0:
        raise ValueError("source duration must be positive")
    cut = d if tau_delays is None else np.asarray(tau_delays, dtype=np.float64)
    hits = np.nonzero(cut >= total_ms)[0]
    tau = int(hits[0]) + 1 if hits.size else d.size
    # (i - 1) / lam with lam = |y| / T
    ideal = np.arange(tau) * (total_ms / d.size)
    return float(np.mean(d[:tau] - ideal))


def proportion(delays, total_ms: float) -> float:
    d = np.asarray(delays, dtype=np.float64)
    if d.size == 0:
        raise ValueError("empty hypothesis")
    return float(d.sum() / (total_ms * d.size))


def delays(trace: SessionTrace) -> list[int]:
    return [c.source_consumed_ms for c in trace.commits]


def ca_delays(trace: SessionTrace) -> list[float]:
    return [c.source_consumed_ms + c.wall_compute_ms for c in trace.commits]


def average_lagging(trace: SessionTrace) -> float:
    return lagging(delays(trace), trace.total_source_ms)


def average_proportion(trace: SessionTrace) -> float:
    return proportion(delays(trace), trace.total_source_ms)


def computational_aware_al(trace: SessionTrace) -> float:
    return lagging(ca_delays(trace), trace.total_source_ms, tau_delays=delays(trace))


def chunk_compute_ms(trace: SessionTrace) -> list[float]:
    """Compute time spent on each chunk: encoding, ASR steps and the commits it triggered.

    ST work is only visible through the cumulative counter on commits, so it
    is recovered as the gap between consecutive counters. Tail decoding is
    charged to the final chunk.
    """
    per_chunk: list[float] = []
    synced = pending = 0.0
    for ev in trace.events:
        if ev.type == "chunk":
            per_chunk.append(ev.compute_ms)
            pending += ev.compute_ms
        elif ev.type == "commit" and per_chunk:
            per_chunk[-1] += max(0.0, ev.wall_compute_ms - synced - pending)
            synced, pending = ev.wall_compute_ms, 0.0
    if per_chunk and "compute_ms" in trace.summary:
        per_chunk[-1] += max(0.0, trace.summary["compute_ms"] - synced - pending)
    return [round(x, 6) for x in per_chunk]


@dataclass(frozen=True)
class LatencyReport:
    delays: tuple[int, ...]
    ca_delays: tuple[float, ...]
    total_source_ms: int
    al_ms: float
    ap: float
    ca_al_ms: float

    @classmethod
    def from_trace(cls, trace: SessionTrace) -> "LatencyReport":
        return cls(tuple(delays(trace)), tuple(ca_delays(trace)), trace.total_source_ms,
                   average_lagging(trace), average_proportion(trace), computational_aware_al(trace))


def token_accuracy(hyp, ref) -> float:
    """Position-wise matches over the longer length; two empty sequences score 1."""
    n = max(len(hyp), len(ref))
    if n == 0:
        return 1.0
    return sum(a == b for a, b in zip(hyp, ref)) / n


def _ngrams(seq, n):
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


def corpus_bleu(hyps, refs, max_n: int = 4) -> float:
    """Corpus BLEU in [0, 100] over token sequences.

    Clipped n-gram counts are pooled over the corpus; orders above one get
    add-one smoothing, and the brevity penalty is the usual one. Meant for
    relative comparisons only.
    """
    if len(hyps) != len(refs):
        raise ValueError("hypothesis and reference lists differ in length")
    if not hyps:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp, ref = list(hyp), list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_p = math.log(matches[0] / totals[0])
    for n in range(1, max_n):
        log_p += math.log((matches[n] + 1) / (totals[n] + 1))
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p / max_n)


def evaluate(traces, references) -> dict:
    """Corpus report: mean latencies plus BLEU and token accuracy of the translations."""
    traces = list(traces)
    if len(traces) != len(references):
        raise ValueError("one reference per trace is required")
    if not traces:
        raise ValueError("empty corpus")
    reports = [LatencyReport.from_trace(t) for t in traces]
    hyps = [t.translation for t in traces]
    return {
        "al_ms": round(float(np.mean([r.al_ms for r in reports])), 6),
        "ap": round(float(np.mean([r.ap for r in reports])), 6),
        "ca_al_ms": round(float(np.mean([r.ca_al_ms for r in reports])), 6),
        "bleu": round(corpus_bleu(hyps, references), 6),
        "token_accuracy": round(float(np.mean([token_accuracy(h, r) for h, r in zip(hyps, references)])), 6),
        "n_sessions": len(traces),
    }

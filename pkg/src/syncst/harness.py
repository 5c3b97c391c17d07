"""Corpus-level runs: simulate every utterance, sweep configurations, write outputs."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Callable, Iterable

from .corpus import Corpus
from .metrics import evaluate
from .simul_st import SessionConfig, run_session
from .trace import SessionTrace
from .validate import validate_trace

SWEEP_COLUMNS = ("policy", "k", "w", "al_ms", "ca_al_ms", "ap", "bleu")


def simulate_corpus(corpus: Corpus, config: SessionConfig, model: str = "prototype", lm: str = "bigram",
                    asr_view: Callable | None = None) -> list[SessionTrace]:
    traces = []
    for utt in corpus.utterances:
        bundle = corpus.model.bundle(model, frame_labels=utt.frame_labels, weights=config.weights, lm=lm)
        traces.append(run_session(config, utt.frames, bundle, utt_id=utt.utt_id, asr_view=asr_view))
    return traces


def violations(traces: Iterable[SessionTrace]) -> dict[str, list[str]]:
    out = {}
    for tr in traces:
        errs = validate_trace(tr)
        if errs:
            out[tr.header["utt_id"]] = errs
    return out


def fmt_k(k) -> str:
    return "inf" if math.isinf(k) else str(int(k))


def sweep(corpus: Corpus, base: SessionConfig, ks, policies, ws, model: str = "prototype",
          lm: str = "bigram", keep_traces: bool = False):
    """Cross product of ``policies x ks x ws``.

    Returns ``(rows, traces)`` where ``traces`` maps ``(policy, k, w)`` to the
    session traces when ``keep_traces`` is set, else only to their
    validation errors.
    """
    rows, traces = [], {}
    refs = corpus.references()
    for policy in policies:
        for k in ks:
            for w in ws:
                cfg = replace(base, policy=policy, k=k, w=w)
                trs = simulate_corpus(corpus, cfg, model, lm)
                rep = evaluate(trs, refs)
                rows.append({"policy": cfg.policy.value, "k": fmt_k(cfg.k), "w": w,
                             "al_ms": rep["al_ms"], "ca_al_ms": rep["ca_al_ms"], "ap": rep["ap"],
                             "bleu": rep["bleu"]})
                traces[(cfg.policy.value, fmt_k(cfg.k), w)] = trs if keep_traces else violations(trs)
    return rows, traces


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([row["policy"], row["k"], row["w"]]
                        + [f"{row[c]:.6f}" for c in ("al_ms", "ca_al_ms", "ap", "bleu")])
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def write_traces(traces: Iterable[SessionTrace], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for tr in traces:
        path = out / f"{tr.header['utt_id']}.jsonl"
        tr.write(path)
        paths.append(path)
    return paths

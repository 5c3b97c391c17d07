"""Replay validator for session traces.

Works from the serialised trace alone and recomputes every policy quantity
from the logged beam snapshots, so it shares no code with the decoder it
audits beyond the trace reader.
"""

from __future__ import annotations

import math

from .trace import AsrStep, ChunkArrival, Commit, SessionTrace, StreamEnd, parse_score, schema_errors

_BLANK, _BOS, _EOS = 0, 1, 2


def _strip_eos(prefix):
    return prefix[:-1] if prefix and prefix[-1] == _EOS else prefix


def _lcp(prefixes):
    first = prefixes[0]
    n = 0
    while n < len(first) and all(len(p) > n and p[n] == first[n] for p in prefixes):
        n += 1
    return n


def validate_trace(trace: SessionTrace) -> list[str]:
    """All violations found in ``trace``; an empty list means it is sound."""
    errs: list[str] = []
    cfg = trace.header["config"]
    k = math.inf if cfg["k"] == "inf" else int(cfg["k"])
    w, b, policy = int(cfg["w"]), int(cfg["b"]), cfg["policy"]
    n_frames = int(trace.header["n_frames"])
    total_ms = int(trace.header["total_source_ms"])
    if total_ms != n_frames * 10:
        errs.append("total_source_ms does not match n_frames")

    last_time = -1
    chunks_seen = frames_seen = states_seen = 0
    last_step = 0
    env = {"lcp": 0, "sh": 0}
    divergences = {"lcp": 0, "sh": 0}
    phi_at_last_step = None
    committed: list[int] = []
    ended_stream = False
    trigger_left_on = False
    last_compute = 0.0

    def trigger_on() -> bool:
        return (phi_at_last_step is not None and not math.isinf(k)
                and phi_at_last_step - k >= len(committed))

    for n, ev in enumerate(trace.events):
        where = f"event {n + 1} ({ev.type})"
        if ev.time_ms < last_time:
            errs.append(f"{where}: time goes backwards")
        last_time = max(last_time, ev.time_ms)

        if isinstance(ev, ChunkArrival):
            if ended_stream:
                errs.append(f"{where}: chunk after stream end")
            # the commit loop of the previous chunk must have run to completion
            if trigger_on():
                errs.append(f"{where}: trigger still satisfied with {len(committed)} commits")
            chunks_seen += 1
            if ev.i != chunks_seen:
                errs.append(f"{where}: chunk index {ev.i}, expected {chunks_seen}")
            if ev.arrival_ms != ev.i * w * 10:
                errs.append(f"{where}: arrival {ev.arrival_ms} ms, expected {ev.i * w * 10}")
            frames_seen += ev.valid_frames
            states_seen += ev.new_states

        elif isinstance(ev, AsrStep):
            if ev.j != last_step + 1:
                errs.append(f"{where}: step {ev.j} after {last_step}")
            last_step = ev.j
            if ev.j > states_seen:
                errs.append(f"{where}: step {ev.j} uses states not yet emitted ({states_seen})")
            if ev.chunk != chunks_seen:
                errs.append(f"{where}: step logged against chunk {ev.chunk}, latest is {chunks_seen}")
            beam = ev.beam
            if not 1 <= len(beam) <= b:
                errs.append(f"{where}: beam size {len(beam)} outside [1, {b}]")
            prefixes = [tuple(h["prefix"]) for h in beam]
            if len(set(prefixes)) != len(prefixes):
                errs.append(f"{where}: duplicate prefixes in beam")
            keys = [(-parse_score(h["score"]), tuple(h["prefix"])) for h in beam]
            if keys != sorted(keys):
                errs.append(f"{where}: beam not sorted by score then token ids")
            for p in prefixes:
                if _BLANK in p or _BOS in p:
                    errs.append(f"{where}: blank or BOS inside a prefix")
                if _EOS in p[:-1]:
                    errs.append(f"{where}: EOS before the end of a prefix")
                if p and p[-1] == _EOS and chunks_seen * w < n_frames:
                    errs.append(f"{where}: EOS before the final chunk")
            tokens = [_strip_eos(p) for p in prefixes]
            raw = {"lcp": _lcp(tokens), "sh": min(len(t) for t in tokens)}
            if raw["lcp"] != ev.phi_lcp_raw or raw["sh"] != ev.phi_sh_raw:
                errs.append(f"{where}: logged raw phi does not match the beam")
            if raw["lcp"] > raw["sh"]:
                errs.append(f"{where}: LCP exceeds SH")
            for kind in env:
                if raw[kind] < env[kind]:
                    divergences[kind] += 1
                env[kind] = max(env[kind], raw[kind])
            if env["lcp"] != ev.phi_lcp or env["sh"] != ev.phi_sh:
                errs.append(f"{where}: enforced phi is not the running maximum")
            phi_at_last_step = env[policy]

        elif isinstance(ev, Commit):
            if ev.t != len(committed) + 1:
                errs.append(f"{where}: commit index {ev.t}, expected {len(committed) + 1}")
            if ev.phase == "stream":
                if ended_stream:
                    errs.append(f"{where}: stream commit after stream end")
                if phi_at_last_step is None or not (phi_at_last_step - k >= ev.t - 1):
                    errs.append(f"{where}: commit {ev.t} not justified (phi={phi_at_last_step}, k={cfg['k']})")
            elif not ended_stream:
                errs.append(f"{where}: tail commit before stream end")
            elif trigger_left_on:
                errs.append(f"{where}: decoding resumed after the decoder had ended")
            if ev.chunks_consumed > chunks_seen:
                errs.append(f"{where}: translation used chunks that had not arrived")
            if ev.source_consumed_ms != min(frames_seen * 10, total_ms):
                errs.append(f"{where}: source_consumed_ms {ev.source_consumed_ms}, expected {frames_seen * 10}")
            if ev.source_consumed_ms <= 0:
                errs.append(f"{where}: commit before any source")
            if ev.wall_compute_ms < last_compute:
                errs.append(f"{where}: cumulative compute time decreased")
            last_compute = ev.wall_compute_ms
            committed.append(ev.token)

        elif isinstance(ev, StreamEnd):
            if ended_stream:
                errs.append(f"{where}: repeated stream end")
            if frames_seen != n_frames:
                errs.append(f"{where}: stream ended after {frames_seen} of {n_frames} frames")
            if ev.total_source_ms != total_ms:
                errs.append(f"{where}: total_source_ms disagrees with header")
            # on the final chunk the loop may stop early only because the
            # decoder emitted EOS, after which nothing more is committed
            trigger_left_on = trigger_on()
            ended_stream = True

    if not ended_stream:
        errs.append("trace has no stream_end event")
    s = trace.summary
    if s.get("hypothesis") != committed:
        errs.append("summary hypothesis differs from the committed tokens")
    if s.get("total_source_ms") != total_ms:
        errs.append("summary total_source_ms disagrees with header")
    if "target_cap" in s and len(committed) > s["target_cap"]:
        errs.append("more tokens committed than the target cap allows")
    if "phi_divergences" in s and s["phi_divergences"] != divergences:
        errs.append(f"summary phi_divergences {s['phi_divergences']} != replayed {divergences}")
    return errs


def validate_lines(lines) -> list[str]:
    """Schema check plus replay for a serialised trace."""
    errs = schema_errors(lines)
    if errs:
        return errs
    return validate_trace(SessionTrace.from_lines(lines))


def validate_file(path) -> list[str]:
    with open(path) as fh:
        return validate_lines(fh.read().splitlines())

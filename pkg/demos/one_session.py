"""Walk through a single streaming session on a synthetic utterance.

Run with ``python demos/one_session.py``. Prints the chunk timeline, the
policy values the committer saw and the target tokens as they were committed.
"""

from syncst import SessionConfig, run_session
from syncst.corpus import CorpusConfig, generate
from syncst.metrics import LatencyReport
from syncst.validate import validate_trace

corpus = generate(CorpusConfig(n_utts=1, tokens_range=(6, 8), seed=7))
utt = corpus.utterances[0]
model = corpus.model

print("source   :", " ".join(model.src_vocab.tokens[t] for t in utt.tokens))
print("reference:", " ".join(model.tgt_vocab.tokens[t] for t in corpus.references()[0]))
print(f"{utt.frames.shape[0]} frames = {utt.frames.shape[0] * 10} ms of audio")

# wait-2 on the shortest-hypothesis policy, 480 ms chunks
cfg = SessionConfig(k=2, policy="sh", w=48)
trace = run_session(cfg, utt.frames, model.prototype_bundle(), utt_id=utt.utt_id)

# one line per chunk: how far the beam had got and what was committed
steps_by_chunk = {}
for step in trace.asr_steps:
    steps_by_chunk[step.chunk] = step
for ch in trace.chunks:
    step = steps_by_chunk.get(ch.i)
    best = step.beam[0]["text"] if step else ""
    phis = f"phi_lcp={step.phi_lcp} phi_sh={step.phi_sh}" if step else "no new states"
    done = [c.text for c in trace.commits if c.phase == "stream" and c.chunks_consumed == ch.i]
    print(f"chunk {ch.i} @ {ch.arrival_ms:5d} ms  {phis:24s} best={best!r:30s} commits={done}")

tail = [c.text for c in trace.commits if c.phase == "tail"]
print("committed after the stream ended:", tail)
print("translation:", " ".join(c.text for c in trace.commits))

rep = LatencyReport.from_trace(trace)
print(f"delays {list(rep.delays)} ms, AL {rep.al_ms:.1f} ms, AP {rep.ap:.3f}")

# the validator re-derives every commit decision from the trace alone
print("validator:", validate_trace(trace) or "ok")

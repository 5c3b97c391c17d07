import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncst.metrics import (LatencyReport, average_lagging, average_proportion, chunk_compute_ms,
                            computational_aware_al, corpus_bleu, evaluate, lagging, proportion,
                            token_accuracy)
from syncst.simul_st import CostModel, SessionConfig, run_session
from syncst.trace import Commit, SessionTrace


def hand_al(d, T):
    """The lagging formula written out term by term."""
    lam = len(d) / T
    tau = next((i + 1 for i, x in enumerate(d) if x >= T), len(d))
    return sum(d[i] - i / lam for i in range(tau)) / tau


def trace_of(delays, total_ms, compute=None):
    compute = compute or [0.0] * len(delays)
    events = [Commit(t=i + 1, token=4, text="x", phase="stream", time_ms=d, source_consumed_ms=d,
                     chunks_consumed=1, states_consumed=1, wall_compute_ms=c)
              for i, (d, c) in enumerate(zip(delays, compute))]
    return SessionTrace({"total_source_ms": total_ms}, events)


def test_al_two_tokens():
    assert lagging([500, 1000], 1000) == 500.0
    assert hand_al([500, 1000], 1000) == 500.0


def test_al_full_sentence_is_source_length():
    assert lagging([1000, 1000, 1000], 1000) == 1000.0


def test_al_near_zero_when_keeping_pace():
    d = [1e-6 + i * 250 for i in range(4)]
    assert lagging(d, 1000) == pytest.approx(0.0, abs=1e-5)


def test_ap_fixtures():
    assert proportion([500, 1000], 1000) == 0.75
    assert proportion([480], 4800) == pytest.approx(0.1)
    assert proportion([1000, 1000], 1000) == 1.0


def test_empty_hypothesis():
    with pytest.raises(ValueError, match="empty hypothesis"):
        lagging([], 1000)
    with pytest.raises(ValueError, match="empty hypothesis"):
        average_lagging(trace_of([], 1000))


def test_zero_compute_gives_plain_al():
    tr = trace_of([500, 1000], 1000)
    assert computational_aware_al(tr) == average_lagging(tr) == 500.0


def test_constant_compute_adds_to_each_delay():
    # 10 ms per chunk, two chunks consumed by both commits
    tr = trace_of([960, 960], 2000, compute=[20.0, 20.0])
    rep = LatencyReport.from_trace(tr)
    assert rep.ca_delays == (980.0, 980.0)
    assert rep.ca_al_ms == pytest.approx(hand_al([980, 980], 2000))


@given(st.integers(1, 5000), st.lists(st.tuples(st.integers(1, 5000), st.floats(0, 500)), min_size=1,
                                      max_size=12))
def test_latency_properties(total, pairs):
    d = sorted(min(x, total) for x, _ in pairs)
    c = sorted(y for _, y in pairs)
    tr = trace_of(d, total, c)
    assert average_lagging(tr) == pytest.approx(hand_al(d, total), rel=1e-9, abs=1e-9)
    assert computational_aware_al(tr) >= average_lagging(tr) - 1e-9
    assert 0 < average_proportion(tr) <= 1


def test_token_accuracy():
    ref = list(range(10))
    hyp = ref[:]
    hyp[3], hyp[4] = hyp[4], hyp[3]
    assert token_accuracy(hyp, ref) == 0.8
    assert token_accuracy(ref, ref) == 1.0
    assert token_accuracy([], []) == 1.0
    assert token_accuracy([1], [1, 2, 3, 4]) == 0.25


def test_bleu_fixtures():
    refs = [[1, 2, 3, 4, 5], [6, 7, 8, 9]]
    assert corpus_bleu(refs, refs) == pytest.approx(100.0)
    assert corpus_bleu([[20, 21, 22, 23, 24], [25, 26, 27, 28]], refs) == 0.0
    with pytest.raises(ValueError):
        corpus_bleu([], [])


def test_bleu_hand_computed():
    # unigram 3/4; higher orders smoothed: 3/4, 2/3, 1/2; equal lengths, no penalty
    want = 100 * (0.75 * 0.75 * (2 / 3) * 0.5) ** 0.25
    assert corpus_bleu([[1, 2, 3, 4]], [[1, 2, 3, 5]]) == pytest.approx(want)
    # short hypothesis: brevity penalty exp(1 - 4/2)
    short = corpus_bleu([[1, 2]], [[1, 2, 3, 4]])
    assert short == pytest.approx(100 * math.exp(-1) * (1.0 * 1.0 * 1.0 * 1.0) ** 0.25)


@given(st.lists(st.lists(st.integers(4, 9), min_size=1, max_size=8), min_size=1, max_size=5), st.data())
def test_bleu_range(refs, data):
    hyps = [data.draw(st.lists(st.integers(4, 9), max_size=8)) for _ in refs]
    assert 0.0 <= corpus_bleu(hyps, refs) <= 100.0 + 1e-9


def test_evaluate_report(small_corpus):
    traces = [run_session(SessionConfig(k=3), u.frames, small_corpus.model.prototype_bundle())
              for u in small_corpus.utterances]
    rep = evaluate(traces, small_corpus.references())
    assert set(rep) == {"al_ms", "ap", "ca_al_ms", "bleu", "token_accuracy", "n_sessions"}
    assert rep["n_sessions"] == len(traces)
    assert rep["ca_al_ms"] >= rep["al_ms"]
    assert 0 < rep["ap"] <= 1
    with pytest.raises(ValueError):
        evaluate(traces, small_corpus.references()[:-1])


def test_chunk_compute_counts_st_calls(small_corpus):
    # with one unit per ST call and nothing else, each chunk's cost is its number of ST calls
    unit = CostModel(per_state=0.0, per_candidate=0.0, per_st_step=1.0)
    for utt in small_corpus.utterances:
        tr = run_session(SessionConfig(k=1), utt.frames, small_corpus.model.prototype_bundle(), cost=unit)
        per = chunk_compute_ms(tr)
        want = [0.0] * len(tr.chunks)
        for c in tr.commits:
            want[c.chunks_consumed - 1] += 1
        want[-1] += 1  # the call that returned end-of-sentence
        assert per == want


def test_chunk_compute_sums_to_session_total(small_corpus):
    utt = small_corpus.utterances[2]
    tr = run_session(SessionConfig(k=2), utt.frames, small_corpus.model.prototype_bundle())
    assert sum(chunk_compute_ms(tr)) == pytest.approx(tr.summary["compute_ms"], abs=1e-6)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncst.ctc_prefix import (NEG_INF, PrefixScorer, advance_state, brute_force_exact_prob,
                               brute_force_prefix_prob, initial_state, prefix_extend_score,
                               prefix_extend_scores)

# two steps over {blank, a}: p1(a)=0.6, p1(blank)=0.4, p2(a)=0.5, p2(blank)=0.5
TWO_STEP = np.log([[0.4, 0.6], [0.5, 0.5]])


def hand_enumeration(probs, prefix):
    """Independent oracle: every alignment, collapsed by hand."""
    total = 0.0
    for path in itertools.product(range(probs.shape[1]), repeat=probs.shape[0]):
        out, prev = [], None
        for lab in path:
            if lab != prev and lab != 0:
                out.append(lab)
            prev = lab
        if tuple(out[:len(prefix)]) == tuple(prefix):
            total += math.prod(probs[t, lab] for t, lab in enumerate(path))
    return total


def score(post, prefix):
    st_ = initial_state(post)
    logp = 0.0
    for c in prefix:
        logp, st_ = prefix_extend_score(st_, post, c)
    return logp


def test_prefix_a_is_0_8():
    assert math.exp(score(TWO_STEP, [1])) == pytest.approx(0.8, abs=1e-12)
    assert hand_enumeration(np.exp(TWO_STEP), [1]) == pytest.approx(1 - 0.4 * 0.5)


def test_repeat_needs_a_blank_between():
    assert score(TWO_STEP, [1, 1]) == NEG_INF
    assert brute_force_prefix_prob(TWO_STEP, [1, 1]) == 0.0


def test_zero_steps_nonempty_prefix_is_impossible():
    empty = np.zeros((0, 2))
    assert score(empty, [1]) == NEG_INF


def test_blank_is_rejected():
    with pytest.raises(ValueError, match="blank is not a prefix token"):
        prefix_extend_score(initial_state(TWO_STEP), TWO_STEP, 0)


def test_brute_force_basics():
    assert brute_force_prefix_prob(TWO_STEP, []) == pytest.approx(1.0)
    assert brute_force_prefix_prob(TWO_STEP, [1, 1, 1]) == 0.0
    big = np.log(np.full((9, 2), 0.5))
    with pytest.raises(ValueError, match="oracle limit exceeded"):
        brute_force_prefix_prob(big, [1])


def test_exact_probability_example():
    # "a" exactly: a a, a blank, blank a
    assert brute_force_exact_prob(TWO_STEP, [1]) == pytest.approx(0.6 * 0.5 + 0.6 * 0.5 + 0.4 * 0.5)
    scorer = PrefixScorer(2)
    scorer.add_posteriors(TWO_STEP)
    assert math.exp(scorer.state((1,), 2).log_prob()) == pytest.approx(0.8)


@st.composite
def instances(draw, max_v=4, max_steps=6):
    v = draw(st.integers(1, max_v))
    steps = draw(st.integers(1, max_steps))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    post = np.log(rng.dirichlet(np.full(v + 1, draw(st.sampled_from([0.2, 1.0, 5.0]))), size=steps))
    prefix = draw(st.lists(st.integers(1, v), max_size=4))
    return post, prefix


@given(instances())
def test_matches_enumeration(inst):
    post, prefix = inst
    got = math.exp(score(post, prefix))
    assert abs(got - hand_enumeration(np.exp(post), prefix)) <= 1e-9
    scorer = PrefixScorer(post.shape[1])
    scorer.add_posteriors(post)
    alpha = math.exp(scorer.state(tuple(prefix), post.shape[0]).log_prob())
    assert abs(alpha - brute_force_exact_prob(post, prefix)) <= 1e-9


@given(instances())
def test_prefix_probability_shrinks_with_length(inst):
    post, prefix = inst
    scores = [score(post, prefix[:n]) for n in range(len(prefix) + 1)]
    assert all(b <= a + 1e-12 for a, b in zip(scores, scores[1:]))
    assert all(s <= 1e-12 for s in scores)


@given(instances(), st.data())
def test_incremental_equals_batch(inst, data):
    post, prefix = inst
    if not prefix:
        return
    steps = post.shape[0]
    batch = PrefixScorer(post.shape[1])
    batch.add_posteriors(post)
    want = batch.state(tuple(prefix), steps)

    inc = PrefixScorer(post.shape[1])
    cut = data.draw(st.integers(0, steps))
    inc.add_posteriors(post[:cut])
    if cut:
        inc.state(tuple(prefix), cut)  # score what is there, then extend
    inc.add_posteriors(post[cut:])
    got = inc.state(tuple(prefix), steps)
    both = np.isfinite(want.log_gn)
    assert np.array_equal(both, np.isfinite(got.log_gn))
    assert np.allclose(got.log_gn[both], want.log_gn[both], atol=1e-12, rtol=0)
    assert got.log_prob() == pytest.approx(want.log_prob(), abs=1e-12) or got.log_prob() == want.log_prob()
    assert got.log_psi == pytest.approx(want.log_psi, abs=1e-12) or got.log_psi == want.log_psi


@given(instances())
def test_vectorised_children_match_single_extensions(inst):
    post, prefix = inst
    parent = initial_state(post)
    for c in prefix:
        _, parent = prefix_extend_score(parent, post, c)
    cs = np.arange(1, post.shape[1])
    psi, gn, gb = prefix_extend_scores(parent, post, cs)
    for col, c in enumerate(cs):
        one, child = prefix_extend_score(parent, post, int(c))
        assert psi[col] == pytest.approx(one, abs=1e-12) or psi[col] == one
        assert np.allclose(np.exp(child.log_gn), np.exp(gn[:, col]), atol=1e-14)


def test_advance_state_extends_forward_only():
    scorer = PrefixScorer(2)
    scorer.add_posteriors(TWO_STEP[:1])
    early = scorer.state((1,), 1)
    root = initial_state(TWO_STEP)
    later = advance_state(early, root, TWO_STEP)
    assert later.steps == 2
    assert later.log_gn[0] == early.log_gn[0]
    with pytest.raises(ValueError, match="state not yet available"):
        scorer.state((1,), 2)

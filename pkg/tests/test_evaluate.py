import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signedball import evaluate as ev
from signedball.manifold import EmbeddingStore

from conftest import random_ball_points


def brute_macro(pred, truth):
    """Macro F1 straight from the per-class definitions."""
    out = []
    for cls in (1, -1):
        tp = sum(p == cls and t == cls for p, t in zip(pred, truth))
        fp = sum(p == cls and t != cls for p, t in zip(pred, truth))
        fn = sum(p != cls and t == cls for p, t in zip(pred, truth))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        out.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return sum(out) / 2


def test_score_examples():
    store = EmbeddingStore(np.array([[0.3, 0.0], [0.0, 0.0], [0.3, 0.0]]))
    assert ev.score(store, 0, 2) == 0.0
    assert ev.score(store, 0, 1) == ev.score(store, 1, 0)
    assert ev.score(store, 0, 1) == pytest.approx(-0.619039, abs=1e-6)
    with pytest.raises(IndexError):
        ev.score(store, 0, 3)


def test_score_excludes_virtual_rows():
    store = EmbeddingStore(np.zeros((4, 2)), n_real=3)
    with pytest.raises(IndexError):
        ev.score(store, 0, 3)


def test_classify_rule():
    np.testing.assert_array_equal(ev.classify_scores([0.5, -2.0, 0.0], 0.0), [1, -1, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.floats(-10, 10), st.floats(0, 5))
def test_classify_monotone_in_threshold(s, t, bump):
    low = ev.classify_scores(s, t)
    high = ev.classify_scores(s, t + bump)
    assert np.all(high <= low)


def test_f1_hand_example():
    truth = [1] * 10 + [-1] * 5
    pred = [1] * 8 + [-1] * 2 + [-1] * 4 + [1]
    macro, micro, c = ev.f1_scores(pred, truth)
    assert (c.tp, c.fn, c.tn, c.fp) == (8, 2, 4, 1)
    _, _, f1p, f1n = ev.f1_from_confusion(c)
    assert f1p == pytest.approx(0.84211, abs=1e-5)
    assert f1n == pytest.approx(0.72727, abs=1e-5)
    assert macro == pytest.approx(0.78469, abs=1e-5)
    assert micro == pytest.approx(0.80383, abs=1e-5)


def test_f1_perfect_and_degenerate():
    assert ev.f1_scores([1, -1, 1], [1, -1, 1])[:2] == (1.0, 1.0)
    macro, micro, c = ev.f1_scores([1, 1, 1], [-1, -1, -1])
    assert macro == 0.0 and micro == 0.0
    with pytest.raises(ValueError):
        ev.f1_scores([1, 1], [1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([1, -1]), st.sampled_from([1, -1])), min_size=1, max_size=40))
def test_f1_properties(pairs):
    pred, truth = zip(*pairs)
    macro, micro, c = ev.f1_scores(pred, truth)
    assert 0 <= macro <= 1 and 0 <= micro <= 1
    assert macro == pytest.approx(brute_macro(pred, truth), abs=1e-12)
    assert c.tp + c.fn == sum(t == 1 for t in truth)
    assert c.tn + c.fp == sum(t == -1 for t in truth)
    if c.tp + c.fn == c.tn + c.fp:
        assert micro == pytest.approx(macro, abs=1e-12)


def test_auc_examples():
    assert ev.auc([0.9, 0.8], [0.1]) == 1.0
    assert ev.auc([0.5], [0.5]) == 0.5
    assert ev.auc([0.9, 0.2], [0.5]) == 0.5
    with pytest.raises(ValueError):
        ev.auc([], [0.1])


def test_auc_matches_bruteforce_on_random_instances():
    rng = np.random.default_rng(0)
    for trial in range(500):
        p, q = rng.integers(1, 51, size=2)
        if trial % 2:  # tie-heavy
            pos, neg = rng.integers(0, 4, p).astype(float), rng.integers(0, 4, q).astype(float)
        else:
            pos, neg = rng.normal(0.3, 1, p), rng.normal(0, 1, q)
        assert ev.auc(pos, neg) == ev.auc_bruteforce(pos, neg)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20, unique=True),
       st.lists(st.floats(-5, 5), min_size=1, max_size=20, unique=True))
def test_auc_reversal(pos, neg):
    if set(pos) & set(neg):
        return
    assert ev.auc(np.negative(pos), np.negative(neg)) == pytest.approx(1 - ev.auc(pos, neg), abs=1e-12)


def _exhaustive_best(s, signs):
    """Every candidate scored by f1_scores directly; best macro, smallest on ties."""
    vals = np.unique(s)
    cands = [-np.inf] + [(a + b) / 2 for a, b in zip(vals[:-1], vals[1:])] + [np.inf]
    best = max(brute_macro(list(ev.classify_scores(s, c)), list(signs)) for c in cands)
    for c in cands:
        if brute_macro(list(ev.classify_scores(s, c)), list(signs)) == best:
            return c, best


def test_fit_threshold_example():
    t = ev.fit_threshold_scores([-1.0, -3.0], [1, -1])
    assert t == -2.0
    assert ev.f1_scores(ev.classify_scores([-1.0, -3.0], t), [1, -1])[0] == 1.0


def test_fit_threshold_separable():
    rng = np.random.default_rng(1)
    s = np.concatenate([rng.uniform(1, 2, 30), rng.uniform(-2, 0, 10)])
    signs = np.array([1] * 30 + [-1] * 10)
    t = ev.fit_threshold_scores(s, signs)
    assert 0 < t < 1 or s[signs < 0].max() < t <= s[signs > 0].min()
    assert ev.f1_scores(ev.classify_scores(s, t), signs)[0] == 1.0


def test_fit_threshold_all_equal():
    t = ev.fit_threshold_scores([2.0, 2.0, 2.0], [1, -1, 1])
    assert t < 2.0 and t == pytest.approx(2.0, abs=1e-14)
    assert np.all(ev.classify_scores([2.0] * 3, t) == 1)


def test_fit_threshold_requires_both_signs():
    with pytest.raises(ValueError):
        ev.fit_threshold_scores([1.0, 2.0], [1, 1])


@pytest.mark.parametrize("seed", range(30))
def test_fit_threshold_matches_exhaustive_scan(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(2, 25)
    s = rng.integers(-5, 6, n).astype(float) if seed % 2 else rng.normal(size=n)
    signs = rng.choice([1, -1], n)
    signs[0], signs[1] = 1, -1
    t = ev.fit_threshold_scores(s, signs)
    ref_t, ref_best = _exhaustive_best(s, signs)
    if len(np.unique(s)) > 1:
        assert t == ref_t
    assert brute_macro(list(ev.classify_scores(s, t)), list(signs)) == pytest.approx(ref_best)


@pytest.mark.parametrize("transform", [np.exp, lambda x: 3 * x + 7, np.arctan])
def test_fit_threshold_invariant_under_increasing_maps(transform):
    rng = np.random.default_rng(4)
    s = rng.normal(size=60)
    signs = np.where(s + rng.normal(scale=0.8, size=60) > 0, 1, -1)
    a = ev.classify_scores(s, ev.fit_threshold_scores(s, signs))
    b = ev.classify_scores(transform(s), ev.fit_threshold_scores(transform(s), signs))
    np.testing.assert_array_equal(a, b)


def test_fit_threshold_micro_metric():
    s = np.array([0.0, 1.0, 2.0, 3.0])
    signs = np.array([-1, 1, -1, 1])
    t = ev.fit_threshold_scores(s, signs, "micro")
    assert np.isfinite(t) or np.isinf(t)
    with pytest.raises(ValueError):
        ev.fit_threshold_scores(s, signs, "accuracy")


def test_evaluate_bundle():
    store = EmbeddingStore(np.array([[0.0, 0.0], [0.1, 0.0], [0.8, 0.0], [-0.8, 0.0]]))
    src, dst, signs = np.array([0, 0, 0, 2]), np.array([1, 2, 3, 3]), np.array([1, -1, -1, -1])
    t = ev.fit_threshold(store, src, dst, signs)
    r = ev.evaluate(store, src, dst, signs, t)
    assert (r.macro_f1, r.micro_f1, r.auc) == (1.0, 1.0, 1.0)
    assert r.tp + r.fn == 1 and r.tn + r.fp == 3
    assert json.loads(r.to_json())["auc"] == 1.0
    with pytest.raises(ValueError):
        ev.evaluate(store, [], [], [], t)


def test_null_model_auc():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        store = EmbeddingStore(random_ball_points(rng, 300, 5, 0.9))
        src = rng.integers(0, 300, 2000)
        dst = (src + rng.integers(1, 300, 2000)) % 300
        signs = rng.choice([1, -1], 2000)
        s = ev.scores(store, src, dst)
        assert 0.45 <= ev.auc(s[signs > 0], s[signs < 0]) <= 0.55


def test_edge_features():
    u = np.array([[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]])
    np.testing.assert_allclose(ev.edge_features(u, "hadamard", 0, 0), u[0] ** 2)
    np.testing.assert_array_equal(ev.edge_features(u, "l1", 1, 1), np.zeros(3))
    np.testing.assert_allclose(ev.edge_features(u, "l2", 0, 1), (u[0] - u[1]) ** 2)
    assert ev.edge_features(u, "concat", 0, 1).shape == (6,)
    np.testing.assert_allclose(ev.edge_features(u, "average", 0, 1), (u[0] + u[1]) / 2)
    assert ev.edge_features(u, "concat", np.array([0, 1]), np.array([1, 0])).shape == (2, 6)
    with pytest.raises(ValueError):
        ev.edge_features(u, "cosine", 0, 1)

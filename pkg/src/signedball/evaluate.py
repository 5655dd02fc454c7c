"""Sign scoring, threshold fitting, F1/AUC metrics and edge-feature export."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import get_backend

OPERATORS = ("hadamard", "l1", "l2", "concat", "average")
THRESHOLD_METRICS = ("macro", "micro")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    macro_f1: float
    micro_f1: float
    auc: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _rows(store, idx):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= store.n_real):
        raise IndexError(f"node index outside 0..{store.n_real - 1}")
    return idx


def scores(store, src, dst, backend=None):
    """``-d(u_i, u_j)`` for each pair; higher means more likely positive."""
    src, dst = _rows(store, src), _rows(store, dst)
    return -get_backend(backend).pair_distances(store.matrix, src, dst)


def score(store, i, j):
    return float(scores(store, [i], [j])[0])


def classify_scores(s, threshold):
    """+1 where ``s >= threshold``, -1 elsewhere (ties go positive)."""
    return np.where(np.asarray(s) >= threshold, 1, -1).astype(np.int8)


def classify(store, src, dst, threshold):
    return classify_scores(scores(store, src, dst), threshold)


def _f1(tp, fp, fn):
    den = 2 * tp + fp + fn
    return 2 * tp / den if den else 0.0


def f1_from_confusion(c):
    f1_pos = _f1(c.tp, c.fp, c.fn)
    f1_neg = _f1(c.tn, c.fn, c.fp)
    n_pos, n_neg = c.tp + c.fn, c.tn + c.fp
    m = n_pos + n_neg
    macro = 0.5 * (f1_pos + f1_neg)
    # class-frequency weighted per-class F1
    micro = (n_pos * f1_pos + n_neg * f1_neg) / m if m else 0.0
    return macro, micro, f1_pos, f1_neg


def f1_scores(predicted, truth):
    """Return ``(macro_f1, micro_f1, Confusion)``; zero denominators count as 0."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("predicted and true sign sequences differ in length")
    if predicted.size == 0:
        raise ValueError("need at least one prediction")
    pp, tp_ = predicted > 0, truth > 0
    c = Confusion(int(np.sum(pp & tp_)), int(np.sum(pp & ~tp_)), int(np.sum(~pp & ~tp_)), int(np.sum(~pp & tp_)))
    macro, micro, _, _ = f1_from_confusion(c)
    return macro, micro, c


def auc(pos_scores, neg_scores):
    """Probability a positive edge outscores a negative one, ties counted half.

    Rank-sum form; equals the all-pairs average exactly.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs at least one positive and one negative score")
    allv = np.concatenate([pos, neg])
    _, inverse, counts = np.unique(allv, return_inverse=True, return_counts=True)
    # 2 * average rank of each tie group, kept integral
    ends = np.cumsum(counts)
    twice_rank = 2 * ends - counts + 1
    rank_sum2 = int(np.sum(twice_rank[inverse[:pos.size]]))
    u2 = rank_sum2 - pos.size * (pos.size + 1)
    return (u2 / 2) / (pos.size * neg.size)


def auc_bruteforce(pos_scores, neg_scores):
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs at least one positive and one negative score")
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else (0.5 if a == b else 0.0)
    return total / (pos.size * neg.size)


def fit_threshold_scores(s, signs, metric="macro"):
    """Grid search over midpoints of consecutive distinct scores plus ``±inf``.

    Returns the candidate with the best F1 (``metric``), the smallest one on ties. If all
    scores are equal the result sits just below that score, so everything is positive.
    """
    if metric not in THRESHOLD_METRICS:
        raise ValueError(f"metric must be one of {THRESHOLD_METRICS}")
    s = np.asarray(s, dtype=np.float64).ravel()
    signs = np.asarray(signs).ravel()
    is_pos = signs > 0
    if is_pos.all() or not is_pos.any():
        raise ValueError("validation set must contain edges of both signs")
    values, inverse = np.unique(s, return_inverse=True)
    if len(values) == 1:
        v = values[0]
        return float(v - np.finfo(float).eps * max(1.0, abs(v)))

    n_pos = int(is_pos.sum())
    n_neg = len(s) - n_pos
    pos_at = np.bincount(inverse, weights=is_pos, minlength=len(values))
    neg_at = np.bincount(inverse, weights=~is_pos, minlength=len(values))
    # candidate c predicts positive for values[c:]; c = 0 is -inf, c = len is +inf
    pos_above = np.concatenate([np.cumsum(pos_at[::-1])[::-1], [0.0]])
    neg_above = np.concatenate([np.cumsum(neg_at[::-1])[::-1], [0.0]])
    tp = pos_above
    fp = neg_above
    fn = n_pos - tp
    tn = n_neg - fp
    f1p = np.divide(2 * tp, 2 * tp + fp + fn, out=np.zeros_like(tp), where=(2 * tp + fp + fn) > 0)
    f1n = np.divide(2 * tn, 2 * tn + fn + fp, out=np.zeros_like(tn), where=(2 * tn + fn + fp) > 0)
    if metric == "macro":
        objective = 0.5 * (f1p + f1n)
    else:
        objective = (n_pos * f1p + n_neg * f1n) / len(s)
    best = int(np.argmax(objective))  # first maximum = smallest threshold
    if best == 0:
        return float("-inf")
    if best == len(values):
        return float("inf")
    return float(0.5 * (values[best - 1] + values[best]))


def fit_threshold(store, src, dst, signs, metric="macro"):
    return fit_threshold_scores(scores(store, src, dst), signs, metric)


def evaluate_scores(s, signs, threshold):
    s = np.asarray(s, dtype=np.float64)
    signs = np.asarray(signs)
    if s.size == 0:
        raise ValueError("cannot evaluate an empty edge set")
    macro, micro, c = f1_scores(classify_scores(s, threshold), signs)
    a = auc(s[signs > 0], s[signs < 0])
    return EvalReport(macro, micro, a, float(threshold), c.tp, c.fp, c.tn, c.fn)


def evaluate(store, src, dst, signs, threshold):
    """Classify the given signed edges with ``threshold`` and report F1s and AUC."""
    if len(np.asarray(src)) == 0:
        raise ValueError("cannot evaluate an empty edge set")
    return evaluate_scores(scores(store, src, dst), signs, threshold)


def edge_features(vectors, operator, i, j):
    """Edge vectors from node vectors ``vectors[i]``, ``vectors[j]`` (rows for index arrays)."""
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}; choose from {OPERATORS}")
    a = np.asarray(vectors)[i]
    b = np.asarray(vectors)[j]
    if operator == "hadamard":
        return a * b
    if operator == "l1":
        return np.abs(a - b)
    if operator == "l2":
        return (a - b) ** 2
    if operator == "concat":
        return np.concatenate([a, b], axis=-1)
    return 0.5 * (a + b)

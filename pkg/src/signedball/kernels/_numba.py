"""numba-compiled kernels mirroring :mod:`._numpy` loop by loop."""

import math
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"

from ._numpy import MIN_CONFORMAL, MIN_GAMMA_SQ

_SHRINK = np.nextafter(1.0, 0.0)


@njit(cache=True, inline="always")
def _dist_rows(u, v):
    k = u.shape[0]
    diff = 0.0
    nu = 0.0
    nv = 0.0
    for c in range(k):
        t = u[c] - v[c]
        diff += t * t
        nu += u[c] * u[c]
        nv += v[c] * v[c]
    au = max(1.0 - nu, MIN_CONFORMAL)
    av = max(1.0 - nv, MIN_CONFORMAL)
    x = 2.0 * diff / (au * av)
    return math.log1p(x + math.sqrt(x * (x + 2.0))), diff


@njit(cache=True, inline="always")
def _grad_first(u, v, out, scale):
    """out += scale * d/du d(u, v)"""
    k = u.shape[0]
    diff = 0.0
    nu = 0.0
    nv = 0.0
    for c in range(k):
        t = u[c] - v[c]
        diff += t * t
        nu += u[c] * u[c]
        nv += v[c] * v[c]
    au = max(1.0 - nu, MIN_CONFORMAL)
    av = max(1.0 - nv, MIN_CONFORMAL)
    x = 2.0 * diff / (au * av)
    root = math.sqrt(max(x * (x + 2.0), MIN_GAMMA_SQ))
    coef = scale * 4.0 / (av * root * au * au)
    for c in range(k):
        out[c] += coef * (diff * u[c] + au * (u[c] - v[c]))


@njit(cache=True)
def distance(u, v):
    n = u.shape[0]
    out = np.empty(n)
    for r in range(n):
        out[r] = _dist_rows(u[r], v[r])[0]
    return out


@njit(cache=True)
def distance_grad_first(u, v):
    out = np.zeros_like(u)
    for r in range(u.shape[0]):
        _grad_first(u[r], v[r], out[r], 1.0)
    return out


@njit(cache=True)
def pair_distances(emb, a, b):
    out = np.empty(a.shape[0])
    for r in range(a.shape[0]):
        out[r] = _dist_rows(emb[a[r]], emb[b[r]])[0]
    return out


@njit(cache=True)
def _project_row(row, eps):
    k = row.shape[0]
    n2 = 0.0
    for c in range(k):
        n2 += row[c] * row[c]
    norm = math.sqrt(n2)
    bound = 1.0 - eps
    if norm < bound:
        return
    f = bound / norm
    for c in range(k):
        row[c] *= f
    for _ in range(8):
        n2 = 0.0
        for c in range(k):
            n2 += row[c] * row[c]
        if math.sqrt(n2) <= bound:
            return
        for c in range(k):
            row[c] *= _SHRINK


@njit(cache=True)
def project(theta, eps):
    out = theta.copy()
    for r in range(out.shape[0]):
        _project_row(out[r], eps)
    return out


@njit(cache=True)
def _exp_row(theta, step, out):
    k = theta.shape[0]
    s2 = 0.0
    t2 = 0.0
    for c in range(k):
        s2 += step[c] * step[c]
        t2 += theta[c] * theta[c]
    n = math.sqrt(s2)
    if n == 0.0:
        for c in range(k):
            out[c] = theta[c]
        return
    lam = 2.0 / max(1.0 - t2, MIN_CONFORMAL)
    f = math.tanh(0.5 * lam * n) / n
    xy = 0.0
    y2 = 0.0
    for c in range(k):
        y = f * step[c]
        xy += theta[c] * y
        y2 += y * y
    den = 1.0 + 2.0 * xy + t2 * y2
    a = (1.0 + 2.0 * xy + y2) / den
    b = (1.0 - t2) / den
    for c in range(k):
        out[c] = a * theta[c] + b * (f * step[c])


@njit(cache=True)
def exp_map(theta, step):
    out = np.empty_like(theta)
    for r in range(theta.shape[0]):
        _exp_row(theta[r], step[r], out[r])
    return out


@njit(cache=True)
def triple_batch(emb, anchor, pos, neg, margin, freeze_anchor):
    n, k = emb.shape
    b = anchor.shape[0]
    losses = np.empty(b)
    grad = np.zeros((n, k))
    touched = np.zeros(n, dtype=np.bool_)
    degenerate = 0
    for t in range(b):
        i = anchor[t]
        j = pos[t]
        q = neg[t]
        d_ij, s_ij = _dist_rows(emb[i], emb[j])
        d_ik, s_ik = _dist_rows(emb[i], emb[q])
        loss = max(0.0, d_ij - d_ik + margin)
        losses[t] = loss
        if loss <= 0.0:
            continue
        if s_ij == 0.0 or s_ik == 0.0:
            degenerate += 1
            continue
        _grad_first(emb[j], emb[i], grad[j], 1.0)
        _grad_first(emb[q], emb[i], grad[q], -1.0)
        touched[j] = True
        touched[q] = True
        if not freeze_anchor:
            _grad_first(emb[i], emb[j], grad[i], 1.0)
            _grad_first(emb[i], emb[q], grad[i], -1.0)
            touched[i] = True
    return losses, grad, touched, degenerate


@njit(cache=True, parallel=True)
def _triple_terms(emb, anchor, pos, neg, margin, freeze_anchor):
    b = anchor.shape[0]
    k = emb.shape[1]
    losses = np.empty(b)
    status = np.zeros(b, dtype=np.int8)  # 0 inactive, 1 active, 2 degenerate
    terms = np.zeros((b, 3, k))
    for t in prange(b):
        i = anchor[t]
        j = pos[t]
        q = neg[t]
        d_ij, s_ij = _dist_rows(emb[i], emb[j])
        d_ik, s_ik = _dist_rows(emb[i], emb[q])
        loss = max(0.0, d_ij - d_ik + margin)
        losses[t] = loss
        if loss <= 0.0:
            continue
        if s_ij == 0.0 or s_ik == 0.0:
            status[t] = 2
            continue
        status[t] = 1
        _grad_first(emb[j], emb[i], terms[t, 0], 1.0)
        _grad_first(emb[q], emb[i], terms[t, 1], -1.0)
        if not freeze_anchor:
            _grad_first(emb[i], emb[j], terms[t, 2], 1.0)
            _grad_first(emb[i], emb[q], terms[t, 2], -1.0)
    return losses, status, terms


@njit(cache=True)
def _accumulate(n, anchor, pos, neg, status, terms, freeze_anchor):
    k = terms.shape[2]
    grad = np.zeros((n, k))
    touched = np.zeros(n, dtype=np.bool_)
    degenerate = 0
    for t in range(anchor.shape[0]):
        if status[t] == 2:
            degenerate += 1
        if status[t] != 1:
            continue
        j = pos[t]
        q = neg[t]
        i = anchor[t]
        for c in range(k):
            grad[j, c] += terms[t, 0, c]
        for c in range(k):
            grad[q, c] += terms[t, 1, c]
        touched[j] = True
        touched[q] = True
        if not freeze_anchor:
            for c in range(k):
                grad[i, c] += terms[t, 2, c]
            touched[i] = True
    return grad, touched, degenerate


def triple_batch_parallel(emb, anchor, pos, neg, margin, freeze_anchor):
    """Per-triple gradients in parallel, accumulated serially in triple order."""
    losses, status, terms = _triple_terms(emb, anchor, pos, neg, margin, freeze_anchor)
    grad, touched, degenerate = _accumulate(emb.shape[0], anchor, pos, neg, status, terms, freeze_anchor)
    return losses, grad, touched, degenerate


@njit(cache=True)
def apply_update(emb, grad, rows, lr, eps, exp_retraction):
    k = emb.shape[1]
    step = np.empty(k)
    new = np.empty(k)
    for r in range(rows.shape[0]):
        row = rows[r]
        t2 = 0.0
        for c in range(k):
            t2 += emb[row, c] * emb[row, c]
        scale = -lr * (1.0 - t2) * (1.0 - t2) / 4.0
        for c in range(k):
            step[c] = scale * grad[row, c]
        if exp_retraction:
            _exp_row(emb[row], step, new)
        else:
            for c in range(k):
                new[c] = emb[row, c] + step[c]
        _project_row(new, eps)
        for c in range(k):
            emb[row, c] = new[c]


@njit(cache=True, parallel=True)
def mean_distances(emb, targets, others):
    out = np.empty(targets.shape[0])
    for r in prange(targets.shape[0]):
        t = targets[r]
        total = 0.0
        count = 0
        for o in range(others.shape[0]):
            if others[o] == t:
                continue
            total += _dist_rows(emb[t], emb[others[o]])[0]
            count += 1
        out[r] = total / max(count, 1)
    return out

"""Vectorized numpy kernels. Reference path, and the fallback when numba is disabled."""

import numpy as np

# lower bound on 1 - |x|^2 and on gamma^2 - 1
MIN_CONFORMAL = 1e-15
MIN_GAMMA_SQ = 1e-15
_SHRINK = np.nextafter(1.0, 0.0)


def _parts(u, v):
    diff = np.sum((u - v) ** 2, axis=-1)
    au = np.maximum(1.0 - np.sum(u * u, axis=-1), MIN_CONFORMAL)
    av = np.maximum(1.0 - np.sum(v * v, axis=-1), MIN_CONFORMAL)
    return diff, au, av


def distance(u, v):
    diff, au, av = _parts(u, v)
    x = 2.0 * diff / (au * av)
    # arcosh(1 + x) without cancellation near x = 0
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def distance_grad_first(u, v):
    """Gradient of d(u, v) with respect to its first argument, row-wise."""
    diff, au, av = _parts(u, v)
    x = 2.0 * diff / (au * av)
    root = np.sqrt(np.maximum(x * (x + 2.0), MIN_GAMMA_SQ))
    coef = 4.0 / (av * root * au * au)
    return coef[..., None] * (diff[..., None] * u + au[..., None] * (u - v))


def project(theta, eps):
    norm = np.sqrt(np.sum(theta * theta, axis=-1))
    bound = 1.0 - eps
    out = np.array(theta, dtype=np.float64, copy=True)
    hit = norm >= bound
    if np.any(hit):
        out[hit] *= (bound / norm[hit])[:, None]
        for _ in range(8):
            over = np.sqrt(np.sum(out * out, axis=-1)) > bound
            if not over.any():
                break
            out[over] *= _SHRINK
    return out


def mobius_add(x, y):
    xy = np.sum(x * y, axis=-1, keepdims=True)
    x2 = np.sum(x * x, axis=-1, keepdims=True)
    y2 = np.sum(y * y, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * xy + y2) * x + (1.0 - x2) * y
    return num / (1.0 + 2.0 * xy + x2 * y2)


def exp_map(theta, step):
    theta = np.atleast_2d(theta)
    step = np.atleast_2d(step)
    n = np.sqrt(np.sum(step * step, axis=-1, keepdims=True))
    lam = 2.0 / np.maximum(1.0 - np.sum(theta * theta, axis=-1, keepdims=True), MIN_CONFORMAL)
    safe = np.where(n > 0, n, 1.0)
    y = np.where(n > 0, np.tanh(0.5 * lam * n) / safe, 0.0) * step
    return np.where(n > 0, mobius_add(theta, y), theta)


def riemannian_scale(theta):
    return (1.0 - np.sum(theta * theta, axis=-1)) ** 2 / 4.0


def pair_distances(emb, a, b):
    return distance(emb[a], emb[b])


def triple_batch(emb, anchor, pos, neg, margin, freeze_anchor):
    """Hinge losses of a triple batch and the summed Euclidean gradient per row.

    Returns ``(losses, grad, touched, n_degenerate)``. Triples with coincident points are
    skipped (no gradient) and counted.
    """
    ui, uj, uk = emb[anchor], emb[pos], emb[neg]
    d_ij = distance(ui, uj)
    d_ik = distance(ui, uk)
    losses = np.maximum(0.0, d_ij - d_ik + margin)
    degenerate = (np.sum((ui - uj) ** 2, axis=1) == 0.0) | (np.sum((ui - uk) ** 2, axis=1) == 0.0)
    active = (losses > 0.0) & ~degenerate

    grad = np.zeros_like(emb)
    touched = np.zeros(len(emb), dtype=np.bool_)
    if active.any():
        ui, uj, uk = ui[active], uj[active], uk[active]
        i, j, k = anchor[active], pos[active], neg[active]
        np.add.at(grad, j, distance_grad_first(uj, ui))
        np.add.at(grad, k, -distance_grad_first(uk, ui))
        touched[j] = True
        touched[k] = True
        if not freeze_anchor:
            np.add.at(grad, i, distance_grad_first(ui, uj) - distance_grad_first(ui, uk))
            touched[i] = True
    return losses, grad, touched, int(np.count_nonzero(degenerate & (losses > 0.0)))


def apply_update(emb, grad, rows, lr, eps, exp_retraction):
    """In-place RSGD step for ``rows``: rescale, retract, project."""
    if len(rows) == 0:
        return
    theta = emb[rows]
    step = -lr * riemannian_scale(theta)[:, None] * grad[rows]
    new = exp_map(theta, step) if exp_retraction else theta + step
    emb[rows] = project(new, eps)


def mean_distances(emb, targets, others):
    """Mean distance from each ``targets`` row to the ``others`` rows (self excluded)."""
    out = np.empty(len(targets))
    block = max(1, 2_000_000 // max(len(others), 1))
    other_pts = emb[others]
    for s in range(0, len(targets), block):
        t = targets[s:s + block]
        d = distance(emb[t][:, None, :], other_pts[None, :, :])
        self_mask = t[:, None] == others[None, :]
        d[self_mask] = 0.0
        count = len(others) - self_mask.sum(axis=1)
        out[s:s + block] = d.sum(axis=1) / np.maximum(count, 1)
    return out

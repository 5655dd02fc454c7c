"""Poincaré-ball geometry for single points, plus the embedding store.

Curvature is fixed at -1. Vectorized batch versions live in :mod:`signedball.kernels`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .kernels import _numpy as _k

DEFAULT_EPS = 1e-5
DEFAULT_INIT_RADIUS = 1e-3


class DomainError(ValueError):
    """A point lies on or outside the unit ball."""


class DegenerateError(ValueError):
    """Gradient requested at coincident points."""


def _point(x, name="point"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    return x


def _check_in_ball(*points):
    for p in points:
        if float(p @ p) >= 1.0:
            raise DomainError(f"norm {math.sqrt(float(p @ p)):.17g} >= 1: point outside the Poincaré ball")


def distance(u, v):
    """Poincaré distance ``arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))``."""
    u, v = _point(u), _point(v)
    _check_in_ball(u, v)
    return float(_k.distance(u, v))


def distance_grad(u, v):
    """Euclidean gradients of ``distance(u, v)`` w.r.t. ``u`` and ``v``."""
    u, v = _point(u), _point(v)
    _check_in_ball(u, v)
    if np.array_equal(u, v):
        raise DegenerateError("distance gradient is singular at coincident points")
    return _k.distance_grad_first(u, v), _k.distance_grad_first(v, u)


def to_riemannian(theta, euclid_grad):
    """Rescale a Euclidean gradient by the inverse metric, ``(1-|theta|^2)^2 / 4``."""
    theta = _point(theta)
    return _k.riemannian_scale(theta) * np.asarray(euclid_grad, dtype=np.float64)


def project(theta, eps=DEFAULT_EPS):
    """Pull a point with norm >= 1 - eps back onto the sphere of radius 1 - eps.

    Points strictly inside that sphere are returned unchanged.
    """
    if not 0.0 < eps < 0.1:
        raise ValueError("eps must lie in (0, 0.1)")
    theta = np.asarray(theta, dtype=np.float64)
    return _k.project(theta[None, :], eps)[0] if theta.ndim == 1 else _k.project(theta, eps)


def retract_simple(theta, step, eps=DEFAULT_EPS):
    """First-order retraction ``theta + step`` followed by projection."""
    theta = _point(theta)
    return project(theta + np.asarray(step, dtype=np.float64), eps)


def retract_exp(theta, step, eps=DEFAULT_EPS):
    """Exponential-map retraction ``theta ⊕ tanh(λ|s|/2) s/|s|`` with ``λ = 2/(1-|theta|^2)``."""
    theta = _point(theta)
    step = _point(step, "step")
    return project(_k.exp_map(theta[None, :], step[None, :])[0], eps)


@dataclass(eq=False)
class EmbeddingStore:
    """Rows of Poincaré-ball points, real nodes first then any virtual rows."""

    matrix: np.ndarray
    eps: float = DEFAULT_EPS
    labels: tuple = ()
    n_real: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-d")
        if not 0.0 < self.eps < 0.1:
            raise ValueError("eps must lie in (0, 0.1)")
        if self.n_real is None:
            self.n_real = len(self.matrix)
        if not self.labels:
            self.labels = tuple(str(i) for i in range(self.n_real))
        self.labels = tuple(self.labels)
        if len(self.labels) != self.n_real:
            raise ValueError("label count does not match the number of real rows")

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def real(self):
        """View of the non-virtual rows."""
        return self.matrix[:self.n_real]

    def norms(self):
        return np.sqrt(np.sum(self.real ** 2, axis=1))

    def max_norm(self):
        return float(np.sqrt(np.max(np.sum(self.matrix ** 2, axis=1)))) if len(self.matrix) else 0.0

    def copy(self):
        return EmbeddingStore(self.matrix.copy(), self.eps, self.labels, self.n_real, dict(self.meta))


def init_embeddings(row_count, dim, init_radius=DEFAULT_INIT_RADIUS, seed=0, eps=DEFAULT_EPS):
    """Uniform box initialization, every coordinate in ``±init_radius/sqrt(dim)``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not 0.0 < init_radius < 1.0:
        raise ValueError("init_radius must lie in (0, 1)")
    half = init_radius / math.sqrt(dim)
    matrix = substream(seed, "init").uniform(-half, half, size=(row_count, dim))
    return EmbeddingStore(matrix, eps)


def write_embeddings(store, dest, include_virtual=False):
    """TSV with a ``#`` header recording dim, eps and whether virtual rows are included."""
    rows = store.matrix if include_virtual else store.real
    labels = list(store.labels)
    if include_virtual:
        labels += [f"__virtual_{i}__" for i in range(len(store.matrix) - store.n_real)]
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8") if own else dest
    try:
        fh.write(f"# dim={store.dim}\teps={store.eps!r}\tvirtual={int(include_virtual)}\trows={len(rows)}\n")
        for lab, row in zip(labels, rows):
            fh.write(lab + "\t" + "\t".join(format(x, ".17g") for x in row) + "\n")
    finally:
        if own:
            fh.close()


def read_embeddings(source):
    """Inverse of :func:`write_embeddings`; virtual rows (if any) are dropped."""
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, encoding="utf-8") if own else source
    try:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("embedding file lacks its '# dim=...' header")
        meta = dict(item.split("=", 1) for item in header[1:].split())
        dim = int(meta["dim"])
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != dim + 1:
                raise ValueError(f"line {lineno}: expected label and {dim} coordinates")
            if parts[0].startswith("__virtual_"):
                continue
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    finally:
        if own:
            fh.close()
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    if len(matrix) and np.max(np.sum(matrix ** 2, axis=1)) >= 1.0:
        raise DomainError("embedding file contains a point outside the unit ball")
    return EmbeddingStore(matrix, float(meta.get("eps", DEFAULT_EPS)), tuple(labels))

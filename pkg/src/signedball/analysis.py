"""Hierarchy diagnostics for a trained embedding: radius bands, centrality, power-law fit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .kernels import get_backend

PROFILE_CUTOFF = 5000
PROFILE_SAMPLE = 1000


@dataclass(frozen=True)
class BandSummary:
    band: int
    nodes: np.ndarray
    mean_pos_degree: float
    mean_neg_degree: float
    ratio: float
    mean_norm: float

    @property
    def size(self):
        return len(self.nodes)


def radius_bands(store, graph, band_count=5):
    """Split real nodes into ``band_count`` equal-count groups by embedding norm.

    Band 0 is innermost; when sizes cannot be equal the inner bands get the extra node.
    Degrees come from the real edges of ``graph``. ``ratio`` is ``inf`` when a band has no
    negative degree (``nan`` when it has neither).
    """
    n = store.n_real
    if graph.node_count != n:
        raise ValueError("graph and embedding disagree on the number of nodes")
    if not 1 <= band_count <= n:
        raise ValueError("band_count must lie in 1..N")
    norms = store.norms()
    order = np.lexsort((np.arange(n), norms))
    d_pos = graph.degrees(1)
    d_neg = graph.degrees(-1)
    out = []
    for b, nodes in enumerate(np.array_split(order, band_count)):
        p = float(d_pos[nodes].mean())
        q = float(d_neg[nodes].mean())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = float(np.float64(p) / np.float64(q))
        out.append(BandSummary(b, nodes, p, q, ratio, float(norms[nodes].mean())))
    return out


def centrality_profile(store, sample_size=PROFILE_SAMPLE, cutoff=PROFILE_CUTOFF, seed=0, backend=None):
    """Per real node: ``(node, norm, mean distance to the other real nodes)``, by norm.

    Exact all-pairs for ``N <= cutoff`` (O(N^2)); above it the mean is estimated from one
    seeded uniform sample of ``sample_size`` nodes shared by all rows.
    """
    n = store.n_real
    if n < 2:
        raise ValueError("centrality profile needs at least two nodes")
    targets = np.arange(n, dtype=np.int64)
    if n <= cutoff:
        others = targets
    else:
        others = np.sort(substream(seed, "profile").choice(n, size=min(sample_size, n), replace=False))
    mean_d = get_backend(backend).mean_distances(store.matrix, targets, others.astype(np.int64))
    norms = store.norms()
    order = np.lexsort((targets, norms))
    return targets[order], norms[order], mean_d[order]


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    degree_min: int
    degree_max: int
    r2: float
    points: int


def powerlaw_summary(histogram, degree_min=1):
    """Least-squares line through ``log(count)`` vs ``log(degree)``.

    A quick diagnostic of heavy tails, not a maximum-likelihood estimate. The exponent is
    the negated slope.
    """
    pts = sorted((int(d), int(c)) for d, c in histogram.items() if d >= max(degree_min, 1) and c > 0)
    if len(pts) < 3:
        raise ValueError("power-law fit needs at least 3 distinct degrees with non-zero counts")
    x = np.log(np.array([p[0] for p in pts], dtype=float))
    y = np.log(np.array([p[1] for p in pts], dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    # a flat histogram leaves only rounding noise in ss_tot
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 1e-24 * len(pts) * max(1.0, float(y @ y)) else 1.0
    return PowerLawFit(float(-slope), pts[0][0], pts[-1][0], r2, len(pts))

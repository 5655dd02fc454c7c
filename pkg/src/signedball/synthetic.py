"""Small synthetic signed networks with known structure."""

import itertools

import numpy as np

from ._rng import substream
from .graph import SignedGraph


def two_cliques(size=20):
    """Two ``size``-cliques, positive inside, every cross pair negative."""
    edges = [(a, b, 1 if (a < size) == (b < size) else -1)
             for a, b in itertools.combinations(range(2 * size), 2)]
    e = np.array(edges, dtype=np.int64)
    return SignedGraph(2 * size, e[:, 0], e[:, 1], e[:, 2])


def bridged_cliques(size=20, links=5):
    """:func:`two_cliques` plus one bridge node (the last index) befriending ``links``
    members of each clique."""
    base = two_cliques(size)
    bridge = 2 * size
    extra = [(bridge, m) for m in range(links)] + [(bridge, size + m) for m in range(links)]
    src = np.concatenate([base.src, [a for a, _ in extra]])
    dst = np.concatenate([base.dst, [b for _, b in extra]])
    sign = np.concatenate([base.sign, np.ones(len(extra), dtype=np.int64)])
    return SignedGraph(2 * size + 1, src, dst, sign)


def balanced_communities(n_nodes=500, communities=5, p_in=0.1, p_out=0.01, seed=0):
    """Random balanced network: positive edges inside communities, negative across.

    Each intra pair is linked with probability ``p_in``, each inter pair with ``p_out``.
    """
    rng = substream(seed, "synthetic")
    label = np.arange(n_nodes) % communities
    iu, ju = np.triu_indices(n_nodes, k=1)
    same = label[iu] == label[ju]
    keep = rng.random(len(iu)) < np.where(same, p_in, p_out)
    return SignedGraph(n_nodes, iu[keep], ju[keep], np.where(same[keep], 1, -1))

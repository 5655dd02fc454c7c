"""Extended adjacency construction and triple sampling.

Training triples ``(i, j, k)`` need a friend ``j`` and an enemy ``k`` of the anchor ``i``.
Many nodes lack one polarity, so the adjacency is first extended with inferred entries
by one of three strategies:

``random``
    a deficient node gets a uniformly chosen non-adjacent node for each missing sign.
``virtual``
    two extra trainable rows are appended, a universal friend and a universal enemy.
``balance``
    the missing sign is inferred from two-hop paths by the sign product (a friend's enemy
    is an enemy), falling back to ``random`` when no path yields it.
``none``
    the real adjacency only.

Inferred entries only ever extend the lists of deficient nodes; real edges are kept as is.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .graph import SignedGraph

log = logging.getLogger(__name__)

STRATEGIES = ("random", "virtual", "balance", "none")
BALANCE_CAP = 5


@dataclass(frozen=True, eq=False)
class AugmentedGraph:
    base: SignedGraph
    strategy: str
    row_count: int
    pos_ptr: np.ndarray
    pos_idx: np.ndarray
    neg_ptr: np.ndarray
    neg_idx: np.ndarray
    eligible: np.ndarray
    inferred_pos: int = 0
    inferred_neg: int = 0
    ineligible: int = 0
    virtual_pos: int | None = None
    virtual_neg: int | None = None

    @property
    def virtual_rows(self):
        return tuple(v for v in (self.virtual_pos, self.virtual_neg) if v is not None)

    def extended_neighbors(self, node, sign):
        if sign > 0:
            return self.pos_idx[self.pos_ptr[node]:self.pos_ptr[node + 1]]
        return self.neg_idx[self.neg_ptr[node]:self.neg_ptr[node + 1]]

    def extended_sign(self, i, j):
        """``Â[i, j]`` as seen from anchor ``i``: +1, -1 or 0."""
        if np.any(self.extended_neighbors(i, 1) == j):
            return 1
        if np.any(self.extended_neighbors(i, -1) == j):
            return -1
        return 0

    def is_valid(self, triple):
        i, j, k = triple
        return i != j and i != k and self.extended_sign(i, j) > 0 and self.extended_sign(i, k) < 0


def _lists_to_csr(lists):
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.fromiter((v for x in lists for v in x), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


def _random_pick(rng, n, excluded):
    """Uniform node in ``0..n-1`` outside ``excluded``; None if there is none."""
    free = n - len(excluded)
    if free <= 0:
        return None
    if free * 4 >= n:
        while True:
            c = int(rng.integers(n))
            if c not in excluded:
                return c
    candidates = np.setdiff1d(np.arange(n), np.fromiter(excluded, dtype=np.int64))
    return int(candidates[rng.integers(len(candidates))])


def _balance_candidates(graph, i, want, rng):
    """Up to BALANCE_CAP non-adjacent nodes whose two-hop sign vote equals ``want``."""
    votes = {}
    adjacent = set(graph.pos_idx[graph.pos_ptr[i]:graph.pos_ptr[i + 1]].tolist())
    adjacent.update(graph.neg_idx[graph.neg_ptr[i]:graph.neg_ptr[i + 1]].tolist())
    for s1, ptr1, idx1 in ((1, graph.pos_ptr, graph.pos_idx), (-1, graph.neg_ptr, graph.neg_idx)):
        for m in idx1[ptr1[i]:ptr1[i + 1]].tolist():
            for s2, ptr2, idx2 in ((1, graph.pos_ptr, graph.pos_idx), (-1, graph.neg_ptr, graph.neg_idx)):
                for t in idx2[ptr2[m]:ptr2[m + 1]].tolist():
                    if t != i:
                        votes[t] = votes.get(t, 0) + s1 * s2
    cands = [t for t, v in votes.items() if t not in adjacent and v * want > 0]
    if not cands:
        return []
    cands = np.array(sorted(cands), dtype=np.int64)
    strength = np.array([abs(votes[t]) for t in cands.tolist()])
    # strongest votes first, ties in seeded random order
    order = np.lexsort((rng.permutation(len(cands)), -strength))
    return cands[order[:BALANCE_CAP]].tolist()


def build_extended(graph, strategy="virtual", seed=0):
    """Extend the adjacency of ``graph`` so that nodes gain both a friend and an enemy.

    Only nodes with at least one real edge are augmented. Nodes that stay deficient are
    excluded from anchor sampling and counted in ``ineligible``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown augmentation strategy {strategy!r}; choose from {STRATEGIES}")
    n = graph.node_count
    if n < 2:
        raise ValueError("augmentation needs a graph with at least two nodes")
    rng = substream(seed, "augment")

    pos = [graph.pos_idx[graph.pos_ptr[v]:graph.pos_ptr[v + 1]].tolist() for v in range(n)]
    neg = [graph.neg_idx[graph.neg_ptr[v]:graph.neg_ptr[v + 1]].tolist() for v in range(n)]
    has_edge = [bool(p or q) for p, q in zip(pos, neg)]
    counts = {1: 0, -1: 0}
    row_count = n
    virtual_pos = virtual_neg = None

    if strategy == "virtual":
        virtual_pos, virtual_neg = n, n + 1
        row_count = n + 2
        pos += [[], []]
        neg += [[], []]
        for v in range(n):
            if not has_edge[v]:
                continue
            if not pos[v]:
                pos[v] = [virtual_pos]
                counts[1] += 1
            if not neg[v]:
                neg[v] = [virtual_neg]
                counts[-1] += 1
    elif strategy != "none":
        # inferred pair signs, so that i->t and t->i never disagree
        partners = {}
        for v in range(n):
            if not has_edge[v]:
                continue
            for want, lists in ((1, pos), (-1, neg)):
                if lists[v]:
                    continue
                mine = partners.setdefault(v, {})
                added = []
                if strategy == "balance":
                    added = [t for t in _balance_candidates(graph, v, want, rng)
                             if mine.get(t, want) == want]
                if not added:
                    excluded = {v, *pos[v], *neg[v], *(t for t, s in mine.items() if s != want)}
                    pick = _random_pick(rng, n, excluded)
                    if pick is not None:
                        added.append(pick)
                for t in added:
                    mine[t] = want
                    partners.setdefault(t, {})[v] = want
                lists[v] = sorted(added)
                counts[want] += len(added)

    eligible = np.array([v for v in range(n) if pos[v] and neg[v]], dtype=np.int64)
    ineligible = sum(1 for v in range(n) if has_edge[v]) - len(eligible)
    if ineligible:
        log.info("%d node(s) remain without a friend or an enemy and are never anchors", ineligible)
    pos_ptr, pos_idx = _lists_to_csr(pos)
    neg_ptr, neg_idx = _lists_to_csr(neg)
    return AugmentedGraph(graph, strategy, row_count, pos_ptr, pos_idx, neg_ptr, neg_idx, eligible,
                          counts[1], counts[-1], ineligible, virtual_pos, virtual_neg)


def sample_batch(aug, batch_size, rng):
    """Draw ``batch_size`` independent triples as ``(anchor, pos, neg)`` index arrays.

    Anchor uniform over eligible nodes; friend and enemy uniform over its extended lists.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if len(aug.eligible) == 0:
        raise ValueError("no eligible anchor: no node has both a friend and an enemy")
    anchor = aug.eligible[rng.integers(len(aug.eligible), size=batch_size)]
    out = [anchor]
    for ptr, idx in ((aug.pos_ptr, aug.pos_idx), (aug.neg_ptr, aug.neg_idx)):
        start = ptr[anchor]
        deg = ptr[anchor + 1] - start
        out.append(idx[start + rng.integers(0, deg)])
    return tuple(out)


def epoch_stream(aug, triples_per_epoch, batch_size, seed, epoch):
    """Deterministic batches for one epoch; the last batch may be short."""
    if triples_per_epoch < 1:
        raise ValueError("triples_per_epoch must be >= 1")
    rng = substream(seed, "sampling", epoch)
    remaining = triples_per_epoch
    while remaining > 0:
        b = min(batch_size, remaining)
        yield sample_batch(aug, b, rng)
        remaining -= b


def batches_per_epoch(triples_per_epoch, batch_size):
    return math.ceil(triples_per_epoch / batch_size)

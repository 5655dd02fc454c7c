"""Signed edge-list graphs: parsing, symmetrization, splitting and degree statistics."""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._rng import substream

log = logging.getLogger(__name__)

CONFLICT_POLICIES = ("negative-wins", "drop", "first-wins")

# Node declaration directive: keeps isolated nodes (and label order) across a write/read cycle.
# Any other tool sees an ordinary comment line.
NODE_DIRECTIVE = "#%node"

_SIGN_TOKENS = {"1": 1, "+1": 1, "+": 1, "-1": -1, "-": -1}


class EdgeListError(ValueError):
    """Raised for malformed edge-list input."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnknownLabelError(KeyError):
    def __init__(self, labels):
        self.labels = list(labels)
        super().__init__("labels not present in the node map: " + ", ".join(self.labels))


def _csr(n, rows, cols):
    order = np.lexsort((cols, rows))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, rows + 1, 1)
    np.cumsum(ptr, out=ptr)
    return ptr, cols[order].astype(np.int64)


@dataclass(frozen=True, eq=False)
class SignedGraph:
    """Undirected signed graph over dense node indices ``0..node_count-1``.

    Each undirected edge is stored once in ``src``/``dst``/``sign`` (orientation as first
    seen); the per-sign CSR adjacency holds both directions.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    sign: np.ndarray
    labels: tuple = ()
    counters: Mapping[str, int] = field(default_factory=dict)
    pos_ptr: np.ndarray = field(init=False, repr=False)
    pos_idx: np.ndarray = field(init=False, repr=False)
    neg_ptr: np.ndarray = field(init=False, repr=False)
    neg_idx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        sign = np.ascontiguousarray(self.sign, dtype=np.int8)
        if not (src.shape == dst.shape == sign.shape) or src.ndim != 1:
            raise ValueError("src, dst and sign must be 1-d arrays of equal length")
        n = int(self.node_count)
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint outside 0..node_count-1")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.abs(sign) == 1):
            raise ValueError("sign must be +1 or -1")
        labels = tuple(str(x) for x in self.labels) if self.labels else tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise ValueError("label count does not match node_count")
        for arr in (src, dst, sign):
            arr.flags.writeable = False
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "sign", sign)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counters", dict(self.counters))
        for name, s in (("pos", 1), ("neg", -1)):
            m = sign == s
            rows = np.concatenate([src[m], dst[m]])
            cols = np.concatenate([dst[m], src[m]])
            ptr, idx = _csr(n, rows, cols)
            ptr.flags.writeable = False
            idx.flags.writeable = False
            object.__setattr__(self, f"{name}_ptr", ptr)
            object.__setattr__(self, f"{name}_idx", idx)

    @property
    def edge_count(self):
        return len(self.src)

    @property
    def positive_count(self):
        return int(np.count_nonzero(self.sign > 0))

    @property
    def negative_count(self):
        return int(np.count_nonzero(self.sign < 0))

    @property
    def label_index(self):
        return {lab: i for i, lab in enumerate(self.labels)}

    def degrees(self, sign):
        ptr = self.pos_ptr if sign > 0 else self.neg_ptr
        return np.diff(ptr)

    def edge_sign(self, i, j):
        """Sign of the edge between ``i`` and ``j``, or 0 when absent."""
        for s, ptr, idx in ((1, self.pos_ptr, self.pos_idx), (-1, self.neg_ptr, self.neg_idx)):
            row = idx[ptr[i]:ptr[i + 1]]
            k = np.searchsorted(row, j)
            if k < len(row) and row[k] == j:
                return s
        return 0

    def edge_keys(self):
        """Canonical ``(min, max)`` keys, one per edge."""
        lo = np.minimum(self.src, self.dst)
        hi = np.maximum(self.src, self.dst)
        return lo * self.node_count + hi

    def subgraph(self, mask):
        """Same node set, edges restricted to ``mask``."""
        return SignedGraph(self.node_count, self.src[mask], self.dst[mask], self.sign[mask], self.labels)


def neighbors(graph, node, sign):
    """Sorted neighbors of ``node`` connected by edges of the given sign."""
    if not 0 <= node < graph.node_count:
        raise IndexError(f"node {node} out of range 0..{graph.node_count - 1}")
    if sign > 0:
        return graph.pos_idx[graph.pos_ptr[node]:graph.pos_ptr[node + 1]]
    return graph.neg_idx[graph.neg_ptr[node]:graph.neg_ptr[node + 1]]


def symmetrize(src, dst, sign, node_count=None, policy="negative-wins", labels=()):
    """Collapse directed (or repeated) edge records into an undirected SignedGraph.

    Records sharing an unordered pair with the same sign merge into one edge. Pairs seen
    with both signs are resolved by ``policy``: ``negative-wins`` keeps the negative edge,
    ``drop`` removes the pair, ``first-wins`` keeps the sign of the first record.
    Self-loops are removed. Counts land in ``graph.counters``.
    """
    if policy not in CONFLICT_POLICIES:
        raise ValueError(f"unknown conflict policy {policy!r}; choose from {CONFLICT_POLICIES}")
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    sign = np.asarray(sign, dtype=np.int64).ravel()
    if not np.all(np.abs(sign) == 1):
        raise ValueError("sign must be +1 or -1")
    if node_count is None:
        node_count = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1)

    loops = src == dst
    keep = ~loops
    src, dst, sign = src[keep], dst[keep], sign[keep]

    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = lo * node_count + hi
    uniq, first, inverse = np.unique(key, return_index=True, return_inverse=True)
    has_pos = np.zeros(len(uniq), dtype=bool)
    has_neg = np.zeros(len(uniq), dtype=bool)
    has_pos[inverse[sign > 0]] = True
    has_neg[inverse[sign < 0]] = True
    conflict = has_pos & has_neg

    resolved = sign[first].copy()
    if policy == "negative-wins":
        resolved[conflict] = -1
    keep_pair = ~conflict if policy == "drop" else np.ones(len(uniq), dtype=bool)

    # preserve first-seen order and orientation
    order = np.argsort(first[keep_pair], kind="stable")
    pick = first[keep_pair][order]
    out_sign = resolved[keep_pair][order]

    counters = {
        "self_loops": int(loops.sum()),
        "duplicates": int(len(key) - len(uniq)),
        "conflicts": int(conflict.sum()),
    }
    if counters["self_loops"]:
        log.warning("dropped %d self-loop(s)", counters["self_loops"])
    if counters["conflicts"]:
        log.warning("resolved %d sign conflict(s) with policy %s", counters["conflicts"], policy)
    return SignedGraph(node_count, src[pick], dst[pick], out_sign, labels, counters)


def _parse_sign(token, lineno):
    try:
        return _SIGN_TOKENS[token]
    except KeyError:
        try:
            value = float(token)
        except ValueError:
            raise EdgeListError(f"cannot parse sign {token!r}", lineno) from None
        if value in (1.0, -1.0):
            return int(value)
        raise EdgeListError(f"sign {token!r} outside {{+1, -1}}", lineno) from None


def read_edge_records(source, label_index=None):
    """Parse an edge list into ``(src, dst, sign, labels)`` index arrays.

    Without ``label_index`` labels are numbered densely in order of first appearance.
    With one, every label must already be present; unknown labels raise
    :class:`UnknownLabelError` naming all of them.
    """
    fixed = label_index is not None
    index = dict(label_index) if fixed else {}
    missing = []
    src, dst, sign = [], [], []

    def lookup(lab):
        i = index.get(lab)
        if i is None:
            if fixed:
                missing.append(lab)
                return -1
            i = index[lab] = len(index)
        return i

    for lineno, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.split()
            if parts[0] == NODE_DIRECTIVE and len(parts) >= 2 and not fixed:
                lookup(parts[1])
            continue
        parts = line.split()
        if len(parts) < 3:
            raise EdgeListError(f"expected 'src dst sign', got {line!r}", lineno)
        s = _parse_sign(parts[2], lineno)
        src.append(lookup(parts[0]))
        dst.append(lookup(parts[1]))
        sign.append(s)

    if missing:
        raise UnknownLabelError(dict.fromkeys(missing))
    labels = [None] * len(index)
    for lab, i in index.items():
        labels[i] = lab
    return (np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
            np.array(sign, dtype=np.int64), labels)


def _lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
        return
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    for line in source:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def load_edge_list(source, policy="negative-wins", label_index=None):
    """Load an edge-list file (path, text/byte stream, or iterable of lines).

    Lines are ``src dst sign`` separated by whitespace; ``#`` starts a comment. Sign
    tokens ``1``, ``-1``, ``+`` and ``-`` are accepted.

    >>> g = load_edge_list(["# comment", "a b +"])
    >>> g.node_count, g.labels
    (2, ('a', 'b'))
    """
    src, dst, sign, labels = read_edge_records(source, label_index)
    if label_index is not None:
        labels = [None] * len(label_index)
        for lab, i in label_index.items():
            labels[i] = lab
    if not labels:
        raise EdgeListError("empty graph: no nodes")
    return symmetrize(src, dst, sign, len(labels), policy, labels)


def write_edge_list(graph, dest, declare_nodes=True, header=None):
    """Write ``graph`` as a labelled edge list.

    With ``declare_nodes`` every node is listed first as a ``#%node`` directive so that
    reloading reproduces the label map exactly, isolated nodes included.
    """
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8") if own else dest
    try:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        if declare_nodes:
            for lab in graph.labels:
                fh.write(f"{NODE_DIRECTIVE} {lab}\n")
        labels = graph.labels
        for a, b, s in zip(graph.src.tolist(), graph.dst.tolist(), graph.sign.tolist()):
            fh.write(f"{labels[a]} {labels[b]} {s}\n")
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class SplitBundle:
    train: SignedGraph
    validation: SignedGraph
    test: SignedGraph
    seed: int
    ratios: tuple

    @property
    def counts(self):
        return {"train": self.train.edge_count, "validation": self.validation.edge_count,
                "test": self.test.edge_count}


def _largest_remainder(total, ratios):
    exact = np.asarray(ratios, dtype=float) * total
    counts = np.floor(exact).astype(np.int64)
    short = total - counts.sum()
    if short:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def split_edges(graph, ratios=(0.8, 0.1, 0.1), seed=0, stratify=False):
    """Partition the edges into train/validation/test uniformly at random.

    Ratios ``(1, 0, 0)`` give the reconstruction setup: everything is training data.
    ``stratify=True`` applies the ratios to each sign separately.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or ratios[0] <= 0:
        raise ValueError("ratios must be three non-negative numbers with a positive train share")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)!r}")

    rng = substream(seed, "split")
    m = graph.edge_count
    part = np.empty(m, dtype=np.int8)
    groups = [np.flatnonzero(graph.sign > 0), np.flatnonzero(graph.sign < 0)] if stratify else [np.arange(m)]
    for members in groups:
        counts = _largest_remainder(len(members), ratios)
        shuffled = members[rng.permutation(len(members))]
        bounds = np.cumsum(counts)
        part[shuffled[:bounds[0]]] = 0
        part[shuffled[bounds[0]:bounds[1]]] = 1
        part[shuffled[bounds[1]:]] = 2

    train = graph.subgraph(part == 0)
    if train.positive_count == 0 or train.negative_count == 0:
        raise ValueError("split leaves the training set without positive or negative edges")
    return SplitBundle(train, graph.subgraph(part == 1), graph.subgraph(part == 2), seed, ratios)


def degree_stats(graph):
    """Per-sign degree histograms ``{degree: node count}``, sorted by degree."""
    out = []
    for s in (1, -1):
        deg, cnt = np.unique(graph.degrees(s), return_counts=True)
        out.append({int(d): int(c) for d, c in zip(deg, cnt)})
    return tuple(out)

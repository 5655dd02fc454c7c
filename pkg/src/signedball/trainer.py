"""Riemannian SGD on the triple hinge loss ``max(0, d(i, j) - d(i, k) + margin)``."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import manifold
from .kernels import get_backend
from .sampler import STRATEGIES, build_extended, epoch_stream

log = logging.getLogger(__name__)


class NumericalError(FloatingPointError):
    """Training produced a non-finite loss or coordinate."""


@dataclass
class TrainConfig:
    dim: int = 20
    margin: float = 1.0
    lr: float = 0.05
    epochs: int = 100
    batch_size: int = 512
    triples_per_epoch: int | None = None  # None: one triple per training edge
    strategy: str = "virtual"
    retraction: str = "simple"
    eps: float = manifold.DEFAULT_EPS
    init_radius: float = manifold.DEFAULT_INIT_RADIUS
    seed: int = 0
    lr_decay: str = "linear"
    freeze_anchor: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.margin > 0:
            raise ValueError("margin must be > 0")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.triples_per_epoch is not None and self.triples_per_epoch < 1:
            raise ValueError("triples_per_epoch must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.retraction not in ("simple", "exp"):
            raise ValueError("retraction must be 'simple' or 'exp'")
        if not 0.0 < self.eps < 0.1:
            raise ValueError("eps must lie in (0, 0.1)")
        if self.lr_decay not in ("constant", "linear"):
            raise ValueError("lr_decay must be 'constant' or 'linear'")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    zero_loss_fraction: float
    max_norm: float
    seconds: float

    def tsv(self):
        return (f"{self.epoch}\t{self.mean_loss:.10g}\t{self.zero_loss_fraction:.6f}\t"
                f"{self.max_norm:.10g}\t{self.seconds:.4f}")


LOG_HEADER = "epoch\tmean_loss\tzero_loss_fraction\tmax_norm\tseconds"


@dataclass
class TrainReport:
    epochs: list = field(default_factory=list)
    degenerate_skipped: int = 0
    inferred_pos: int = 0
    inferred_neg: int = 0
    ineligible_nodes: int = 0
    backend: str = ""

    @property
    def losses(self):
        return [e.mean_loss for e in self.epochs]

    @property
    def epochs_run(self):
        return len(self.epochs)


def triple_loss(store, triple, margin):
    i, j, k = triple
    m = store.matrix
    return max(0.0, manifold.distance(m[i], m[j]) - manifold.distance(m[i], m[k]) + margin)


def triple_step(store, triple, margin, lr, retraction="simple", freeze_anchor=False, backend=None):
    """One RSGD update from a single triple; returns True if any row moved.

    Rows are left bitwise untouched when the hinge is inactive or the triple is degenerate.
    """
    kern = get_backend(backend)
    idx = [np.array([x], dtype=np.int64) for x in triple]
    _, grad, touched, degenerate = kern.triple_batch(store.matrix, *idx, float(margin), freeze_anchor)
    rows = np.flatnonzero(touched)
    kern.apply_update(store.matrix, grad, rows, float(lr), store.eps, retraction == "exp")
    return len(rows) > 0


def _learning_rate(cfg, step, total):
    if cfg.lr_decay == "constant" or total == 0:
        return cfg.lr
    return cfg.lr * (1.0 - step / total)


def train(graph, config=None, initial=None, aug=None, on_epoch=None, backend=None):
    """Embed ``graph`` into the Poincaré ball.

    ``initial`` overrides the random initialization (a matrix with one row per training
    row, virtual rows included). ``on_epoch(stats, store)`` is called after each epoch.
    Returns ``(store, report)``; the store keeps virtual rows after ``n_real``.
    """
    cfg = config or TrainConfig()
    if graph.edge_count == 0:
        raise ValueError("cannot train on a graph without edges")
    if aug is None:
        aug = build_extended(graph, cfg.strategy, cfg.seed)
    if len(aug.eligible) == 0:
        raise ValueError("no legal triple: no node has both a friend and an enemy after augmentation")

    kern = get_backend(backend)
    batch_fn = kern.triple_batch
    if cfg.threads > 1:
        if kern.name == "numba":
            import numba
            numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
        batch_fn = kern.triple_batch_parallel

    if initial is None:
        store = manifold.init_embeddings(aug.row_count, cfg.dim, cfg.init_radius, cfg.seed, cfg.eps)
    else:
        store = manifold.EmbeddingStore(np.array(initial, dtype=np.float64, copy=True), cfg.eps)
        if store.matrix.shape != (aug.row_count, cfg.dim):
            raise ValueError(f"initial matrix must have shape {(aug.row_count, cfg.dim)}")
    store = manifold.EmbeddingStore(store.matrix, cfg.eps, graph.labels, graph.node_count,
                                    {"virtual_rows": list(aug.virtual_rows)})

    tpe = cfg.triples_per_epoch or graph.edge_count
    per_epoch = math.ceil(tpe / cfg.batch_size)
    total_steps = cfg.epochs * per_epoch
    report = TrainReport(inferred_pos=aug.inferred_pos, inferred_neg=aug.inferred_neg,
                         ineligible_nodes=aug.ineligible, backend=kern.name)
    emb = store.matrix
    exp_mode = cfg.retraction == "exp"
    margin = float(cfg.margin)
    step = 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        loss_sum = 0.0
        zero = 0
        count = 0
        for anchor, pos, neg in epoch_stream(aug, tpe, cfg.batch_size, cfg.seed, epoch):
            losses, grad, touched, degenerate = batch_fn(emb, anchor, pos, neg, margin, cfg.freeze_anchor)
            if not np.all(np.isfinite(losses)):
                raise NumericalError(f"non-finite loss in epoch {epoch}, batch {step % per_epoch}")
            rows = np.flatnonzero(touched)
            kern.apply_update(emb, grad, rows, _learning_rate(cfg, step, total_steps), cfg.eps, exp_mode)
            if not np.all(np.isfinite(emb[rows])):
                bad = rows[~np.all(np.isfinite(emb[rows]), axis=1)]
                raise NumericalError(f"non-finite coordinates after epoch {epoch} in rows {bad[:10].tolist()}")
            loss_sum += float(losses.sum())
            zero += int(np.count_nonzero(losses == 0.0))
            count += len(losses)
            report.degenerate_skipped += int(degenerate)
            step += 1
        stats = EpochStats(epoch, loss_sum / count, zero / count, store.max_norm(), time.perf_counter() - t0)
        report.epochs.append(stats)
        log.debug("epoch %s", stats.tsv())
        if on_epoch is not None:
            on_epoch(stats, store)
    if report.degenerate_skipped:
        log.warning("skipped %d degenerate triple(s) with coincident points", report.degenerate_skipped)
    return store, report

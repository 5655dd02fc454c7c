"""Embedding signed networks in the Poincaré ball with Riemannian SGD."""

__version__ = "0.1.0"

from .graph import SignedGraph, degree_stats, load_edge_list, neighbors, split_edges, symmetrize, write_edge_list
from .manifold import EmbeddingStore, distance, distance_grad, init_embeddings, read_embeddings, write_embeddings
from .sampler import build_extended, epoch_stream, sample_batch
from .trainer import TrainConfig, TrainReport, train, triple_loss, triple_step
from .evaluate import EvalReport, auc, f1_scores, fit_threshold, score

__all__ = [
    "SignedGraph", "degree_stats", "load_edge_list", "neighbors", "split_edges", "symmetrize",
    "write_edge_list", "EmbeddingStore", "distance", "distance_grad", "init_embeddings",
    "read_embeddings", "write_embeddings", "build_extended", "epoch_stream", "sample_batch",
    "TrainConfig", "TrainReport", "train", "triple_loss", "triple_step", "EvalReport", "auc",
    "f1_scores", "fit_threshold", "score",
]

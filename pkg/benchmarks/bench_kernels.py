"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--nodes 2000] [--dim 20]

numba compilation is triggered once before timing, so figures are steady-state.
"""

import argparse
import time

import numpy as np

from signedball.kernels import get_backend
from signedball.synthetic import balanced_communities
from signedball.trainer import TrainConfig, train


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(args):
    rng = np.random.default_rng(0)
    n, k, b = args.nodes, args.dim, args.batch
    emb = rng.normal(size=(n, k))
    emb *= (rng.uniform(0, 0.9, n) / np.linalg.norm(emb, axis=1))[:, None]
    tri = [rng.integers(0, n, b) for _ in range(3)]
    grad = rng.normal(scale=0.1, size=(n, k))
    rows = np.unique(np.concatenate(tri))
    targets = np.arange(n, dtype=np.int64)
    graph = balanced_communities(args.graph_nodes, 5, seed=0)
    cfg = TrainConfig(dim=k, epochs=args.epochs)
    return {
        "triple_batch": lambda kern: kern.triple_batch(emb, *tri, 1.0, False),
        "apply_update": lambda kern: kern.apply_update(emb.copy(), grad, rows, 0.05, 1e-5, False),
        "apply_update (exp)": lambda kern: kern.apply_update(emb.copy(), grad, rows, 0.05, 1e-5, True),
        "mean_distances": lambda kern: kern.mean_distances(emb, targets, targets),
        f"train ({graph.edge_count} edges, {args.epochs} epochs)": lambda kern: train(graph, cfg, backend=kern.name),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--batch", type=int, default=512)
    p.add_argument("--graph-nodes", type=int, default=500)
    p.add_argument("--epochs", type=int, default=20)
    args = p.parse_args()

    backends = [get_backend("numba"), get_backend("numpy")]
    print(f"{'kernel':<36}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, fn in cases(args).items():
        fn(backends[0])  # compile
        t_nb, t_np = (best_of(lambda: fn(kern), args.repeat) for kern in backends)
        print(f"{name:<36}{t_nb:>12.5f}{t_np:>12.5f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()

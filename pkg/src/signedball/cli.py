"""``signedball`` command line: stats, split, train, eval, bands, profile, features."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, evaluate, graph as gc, manifold
from .sampler import STRATEGIES
from .trainer import LOG_HEADER, TrainConfig, train

log = logging.getLogger("signedball")


class CLIError(Exception):
    pass


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, subcommand, config, inputs, outputs, started, seed=None, extra=None):
    manifest = {
        "subcommand": subcommand,
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _manifest_path(output):
    return Path(str(output) + ".manifest.json")


def _load_graph(path, policy):
    try:
        return gc.load_edge_list(path, policy=policy)
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def _load_for_embedding(path, store, policy):
    try:
        return gc.load_edge_list(path, policy=policy, label_index={l: i for i, l in enumerate(store.labels)})
    except gc.UnknownLabelError as exc:
        raise CLIError(f"{path}: nodes missing from the embedding: {', '.join(exc.labels)}") from exc


def _out(path):
    if path is None or str(path) == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def cmd_stats(args):
    started = time.perf_counter()
    g = _load_graph(args.graph, args.conflict_policy)
    pos_hist, neg_hist = gc.degree_stats(g)
    fh, own = _out(args.output)
    try:
        fh.write(f"# nodes={g.node_count}\tedges={g.edge_count}\tpositive={g.positive_count}\t"
                 f"negative={g.negative_count}\n")
        for name, hist in (("positive", pos_hist), ("negative", neg_hist)):
            fh.write(f"# {name} degree histogram\n")
            fh.write("degree\tcount\n")
            for d, c in hist.items():
                fh.write(f"{d}\t{c}\n")
            try:
                fit = analysis.powerlaw_summary(hist, args.degree_min)
                fh.write(f"# {name} power-law fit: exponent={fit.exponent:.6g}\tdegree_range={fit.degree_min}-"
                         f"{fit.degree_max}\tr2={fit.r2:.6g}\tpoints={fit.points}\n")
            except ValueError as exc:
                fh.write(f"# {name} power-law fit: unavailable ({exc})\n")
    finally:
        if own:
            fh.close()
    if own:
        write_manifest(_manifest_path(args.output), "stats", {"degree_min": args.degree_min,
                       "conflict_policy": args.conflict_policy}, [args.graph], [args.output], started)


def cmd_split(args):
    started = time.perf_counter()
    ratios = tuple(args.ratios)
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CLIError(f"--ratios must sum to 1 (got {sum(ratios):g})")
    g = _load_graph(args.graph, args.conflict_policy)
    try:
        bundle = gc.split_edges(g, ratios, args.seed, stratify=args.stratify)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, part in (("train", bundle.train), ("validation", bundle.validation), ("test", bundle.test)):
        path = outdir / f"{name}.txt"
        # only the training file declares nodes; isolated nodes must still get embeddings
        gc.write_edge_list(part, path, declare_nodes=(name == "train"))
        outputs.append(path)
    write_manifest(outdir / "manifest.json", "split",
                   {"ratios": list(ratios), "stratify": args.stratify, "conflict_policy": args.conflict_policy},
                   [args.graph], outputs, started, seed=args.seed,
                   extra={"counts": bundle.counts, "load_counters": g.counters})
    print(json.dumps(bundle.counts))


def _train_config(args):
    try:
        return TrainConfig(dim=args.dim, margin=args.margin, lr=args.lr, epochs=args.epochs,
                           batch_size=args.batch_size, triples_per_epoch=args.triples_per_epoch,
                           strategy=args.augment, retraction=args.retraction, eps=args.eps,
                           init_radius=args.init_radius, seed=args.seed, lr_decay=args.lr_decay,
                           freeze_anchor=args.freeze_anchor, threads=args.threads)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def cmd_train(args):
    started = time.perf_counter()
    cfg = _train_config(args)
    g = _load_graph(args.graph, args.conflict_policy)
    logfh, own_log = _out(args.log)
    out = Path(args.output)
    checkpoints = []
    logfh.write(LOG_HEADER + "\n")

    def on_epoch(stats, store):
        logfh.write(stats.tsv() + "\n")
        logfh.flush()
        if args.ckpt_every and (stats.epoch + 1) % args.ckpt_every == 0 and stats.epoch + 1 < cfg.epochs:
            path = out.with_name(f"{out.name}.ckpt-{stats.epoch + 1}")
            manifold.write_embeddings(store, path)
            checkpoints.append(path)

    try:
        store, report = train(g, cfg, on_epoch=on_epoch)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    finally:
        if own_log:
            logfh.close()
    manifold.write_embeddings(store, out, include_virtual=args.include_virtual)
    log.info("inferred edges: %d positive, %d negative; %d node(s) never anchors",
             report.inferred_pos, report.inferred_neg, report.ineligible_nodes)
    write_manifest(_manifest_path(out), "train", cfg.to_dict(), [args.graph],
                   [out, *checkpoints] + ([args.log] if own_log else []), started, seed=cfg.seed,
                   extra={"inferred_pos": report.inferred_pos, "inferred_neg": report.inferred_neg,
                          "ineligible_nodes": report.ineligible_nodes,
                          "degenerate_skipped": report.degenerate_skipped,
                          "final_mean_loss": report.losses[-1] if report.epochs else None,
                          "conflict_policy": args.conflict_policy})


def _read_store(path):
    try:
        return manifold.read_embeddings(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot read embedding {path}: {exc}") from exc


def cmd_eval(args):
    started = time.perf_counter()
    store = _read_store(args.embedding)
    test = _load_for_embedding(args.test, store, args.conflict_policy)
    inputs = [args.embedding, args.test]
    if args.threshold is not None:
        threshold = args.threshold
    else:
        if args.val is None:
            raise CLIError("either --val or --threshold is required")
        val = _load_for_embedding(args.val, store, args.conflict_policy)
        inputs.insert(1, args.val)
        try:
            threshold = evaluate.fit_threshold(store, val.src, val.dst, val.sign, args.threshold_metric)
        except ValueError as exc:
            raise CLIError(f"threshold fitting failed: {exc}") from exc
    try:
        s = evaluate.scores(store, test.src, test.dst)
        report = evaluate.evaluate_scores(s, test.sign, threshold)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    text = report.to_json(indent=2) + "\n"
    outputs = []
    if args.output:
        Path(args.output).write_text(text)
        outputs.append(args.output)
    else:
        sys.stdout.write(text)
    if args.predictions:
        pred = evaluate.classify_scores(s, threshold)
        with open(args.predictions, "w", encoding="utf-8") as fh:
            fh.write("src\tdst\ttrue_sign\tscore\tpredicted_sign\n")
            for a, b, t, sc, p in zip(test.src.tolist(), test.dst.tolist(), test.sign.tolist(), s.tolist(),
                                      pred.tolist()):
                fh.write(f"{store.labels[a]}\t{store.labels[b]}\t{t}\t{sc!r}\t{p}\n")
        outputs.append(args.predictions)
    if outputs:
        write_manifest(_manifest_path(outputs[0]), "eval",
                       {"threshold": args.threshold, "threshold_metric": args.threshold_metric,
                        "conflict_policy": args.conflict_policy}, inputs, outputs, started)


def _fmt(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".10g")


def cmd_bands(args):
    started = time.perf_counter()
    store = _read_store(args.embedding)
    g = _load_for_embedding(args.graph, store, args.conflict_policy)
    try:
        bands = analysis.radius_bands(store, g, args.bands)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    fh, own = _out(args.output)
    try:
        fh.write("band\tsize\td_pos\td_neg\tratio\tmean_norm\n")
        for b in bands:
            fh.write(f"{b.band}\t{b.size}\t{_fmt(b.mean_pos_degree)}\t{_fmt(b.mean_neg_degree)}\t"
                     f"{_fmt(b.ratio)}\t{_fmt(b.mean_norm)}\n")
    finally:
        if own:
            fh.close()
    if own:
        write_manifest(_manifest_path(args.output), "bands", {"bands": args.bands},
                       [args.embedding, args.graph], [args.output], started)


def cmd_profile(args):
    started = time.perf_counter()
    store = _read_store(args.embedding)
    try:
        nodes, norms, mean_d = analysis.centrality_profile(store, args.sample_size, args.cutoff, args.seed)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    fh, own = _out(args.output)
    try:
        fh.write("label\tnorm\tmean_distance\n")
        for i, r, d in zip(nodes.tolist(), norms.tolist(), mean_d.tolist()):
            fh.write(f"{store.labels[i]}\t{r!r}\t{d!r}\n")
    finally:
        if own:
            fh.close()
    if own:
        write_manifest(_manifest_path(args.output), "profile",
                       {"sample_size": args.sample_size, "cutoff": args.cutoff},
                       [args.embedding], [args.output], started, seed=args.seed)


def cmd_features(args):
    started = time.perf_counter()
    if args.operator not in evaluate.OPERATORS:
        raise CLIError(f"unknown operator {args.operator!r}; choose from {', '.join(evaluate.OPERATORS)}")
    store = _read_store(args.embedding)
    edges = _load_for_embedding(args.edges, store, args.conflict_policy)
    feats = evaluate.edge_features(store.real, args.operator, edges.src, edges.dst)
    fh, own = _out(args.output)
    try:
        fh.write(f"# operator={args.operator}\tdim={feats.shape[1] if feats.ndim == 2 else 0}\n")
        for a, b, s, row in zip(edges.src.tolist(), edges.dst.tolist(), edges.sign.tolist(), feats):
            fh.write(f"{store.labels[a]}\t{store.labels[b]}\t{s}\t" + "\t".join(format(x, ".17g") for x in row)
                     + "\n")
    finally:
        if own:
            fh.close()
    if own:
        write_manifest(_manifest_path(args.output), "features", {"operator": args.operator},
                       [args.embedding, args.edges], [args.output], started)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _eps(text):
    v = float(text)
    if not 0 < v < 0.1:
        raise argparse.ArgumentTypeError("must lie in (0, 0.1)")
    return v


def _unit_open(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="signedball", formatter_class=fmt,
                                description="Poincaré-ball embedding of signed networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        sp.set_defaults(func=func)
        return sp

    def policy(sp):
        sp.add_argument("--conflict-policy", choices=gc.CONFLICT_POLICIES, default="negative-wins",
                        help="how to resolve a pair listed with both signs (directed inputs)")

    sp = add("stats", cmd_stats, "Per-sign degree histograms and log-log power-law fits.")
    sp.add_argument("graph")
    sp.add_argument("-o", "--output", help="output file (default: stdout)")
    sp.add_argument("--degree-min", type=_positive_int, default=1, help="smallest degree used in the fit")
    policy(sp)

    sp = add("split", cmd_split, "Hide edges for validation and test (default 80/10/10).")
    sp.add_argument("graph")
    sp.add_argument("-o", "--outdir", required=True, help="directory for train/validation/test files")
    sp.add_argument("--ratios", type=float, nargs=3, default=[0.8, 0.1, 0.1], metavar=("TRAIN", "VAL", "TEST"),
                    help="edge shares; 1 0 0 gives the reconstruction setup")
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--stratify", action="store_true", help="apply the ratios to each sign separately")
    policy(sp)

    sp = add("train", cmd_train, "Train an embedding with Riemannian SGD on the triple hinge loss.")
    sp.add_argument("graph")
    sp.add_argument("-o", "--output", required=True, help="embedding TSV")
    sp.add_argument("--dim", type=_positive_int, default=20, help="ball dimension K")
    sp.add_argument("--margin", type=_positive_float, default=1.0,
                    help="hinge margin lambda (0.1 was used for reconstruction runs)")
    sp.add_argument("--lr", type=_positive_float, default=0.05, help="initial learning rate")
    sp.add_argument("--lr-decay", choices=("constant", "linear"), default="linear",
                    help="learning-rate schedule; linear decays to zero over the run")
    sp.add_argument("--epochs", type=_nonneg_int, default=100)
    sp.add_argument("--batch-size", type=_positive_int, default=512)
    sp.add_argument("--triples-per-epoch", type=_positive_int, default=None,
                    help="triples drawn per epoch (default: number of training edges)")
    sp.add_argument("--augment", choices=STRATEGIES, default="virtual",
                    help="how nodes lacking a friend or an enemy are completed")
    sp.add_argument("--retraction", choices=("simple", "exp"), default="simple",
                    help="simple: theta + step; exp: exponential map")
    sp.add_argument("--eps", type=_eps, default=manifold.DEFAULT_EPS, help="points are kept at norm <= 1 - eps")
    sp.add_argument("--init-radius", type=_unit_open, default=manifold.DEFAULT_INIT_RADIUS)
    sp.add_argument("--freeze-anchor", action="store_true", help="update only friend and enemy rows")
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--threads", type=_positive_int, default=1,
                    help="worker threads for per-triple gradients")
    sp.add_argument("--log", help="per-epoch TSV log file (default: stdout)")
    sp.add_argument("--ckpt-every", type=_nonneg_int, default=0, help="checkpoint every N epochs (0: never)")
    sp.add_argument("--include-virtual", action="store_true", help="also write virtual-node rows")
    policy(sp)

    sp = add("eval", cmd_eval, "Fit a threshold on validation edges and score test edges.")
    sp.add_argument("embedding")
    sp.add_argument("--val", help="validation edges for threshold fitting")
    sp.add_argument("--test", required=True, help="edges to evaluate (the full graph for reconstruction)")
    sp.add_argument("--threshold", type=float, default=None, help="use this threshold instead of fitting one")
    sp.add_argument("--threshold-metric", choices=evaluate.THRESHOLD_METRICS, default="macro")
    sp.add_argument("-o", "--output", help="report JSON (default: stdout)")
    sp.add_argument("--predictions", help="per-edge TSV of scores and predicted signs")
    policy(sp)

    sp = add("bands", cmd_bands, "Equal-count radius bands with mean degrees.")
    sp.add_argument("embedding")
    sp.add_argument("graph")
    sp.add_argument("-B", "--bands", type=_positive_int, default=5)
    sp.add_argument("-o", "--output")
    policy(sp)

    sp = add("profile", cmd_profile, "Norm vs mean distance to all other nodes.")
    sp.add_argument("embedding")
    sp.add_argument("graph", nargs="?", help="unused; accepted for symmetry with 'bands'")
    sp.add_argument("--sample-size", type=_positive_int, default=analysis.PROFILE_SAMPLE)
    sp.add_argument("--cutoff", type=_positive_int, default=analysis.PROFILE_CUTOFF,
                    help="above this many nodes the mean is estimated from a sample")
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("-o", "--output")

    sp = add("features", cmd_features, "Edge feature vectors for external classifiers.")
    sp.add_argument("embedding")
    sp.add_argument("edges")
    sp.add_argument("--operator", default="hadamard", help="one of " + ", ".join(evaluate.OPERATORS))
    sp.add_argument("-o", "--output")
    policy(sp)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (CLIError, gc.EdgeListError, manifold.DomainError) as exc:
        print(f"signedball {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # reader (e.g. head) went away; silence the flush at interpreter exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

import io
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signedball.graph import (EdgeListError, UnknownLabelError, degree_stats, load_edge_list, neighbors,
                              split_edges, symmetrize, write_edge_list)
from signedball.synthetic import balanced_communities

from conftest import make_graph


def test_load_numeric():
    g = load_edge_list(["0 1 1", "1 2 -1"])
    assert g.node_count == 3 and g.edge_count == 2
    assert g.edge_sign(0, 1) == 1 and g.edge_sign(1, 0) == 1
    assert g.edge_sign(1, 2) == -1
    assert g.edge_sign(0, 2) == 0


def test_load_labels_and_comments():
    g = load_edge_list(["# comment", "a b +"])
    assert g.node_count == 2
    assert g.label_index == {"a": 0, "b": 1}
    assert g.positive_count == 1


def test_self_loop_dropped_and_counted(caplog):
    with caplog.at_level(logging.WARNING):
        g = load_edge_list(["0 0 1"])
    assert g.edge_count == 0
    assert g.counters["self_loops"] == 1
    assert "self-loop" in caplog.text


@pytest.mark.parametrize("text,lineno", [("0 1 1\n0 1\n", 2), ("0 1 2\n", 1), ("# x\n\n0 1 yes\n", 3)])
def test_malformed_lines_report_line_number(text, lineno):
    with pytest.raises(EdgeListError) as err:
        load_edge_list(io.StringIO(text))
    assert err.value.lineno == lineno


def test_empty_input_is_an_error():
    with pytest.raises(EdgeListError):
        load_edge_list(io.StringIO("# nothing here\n"))


def test_byte_stream_and_tabs():
    g = load_edge_list(io.BytesIO(b"x\ty\t-\ny  z   1\n"))
    assert g.labels == ("x", "y", "z")
    assert g.negative_count == 1 and g.positive_count == 1


def test_unknown_labels_listed():
    with pytest.raises(UnknownLabelError) as err:
        load_edge_list(["a b 1", "c d -1"], label_index={"a": 0, "b": 1})
    assert err.value.labels == ["c", "d"]


def test_symmetrize_collapses_reciprocal_pair():
    g = symmetrize([0, 1], [1, 0], [1, 1])
    assert g.edge_count == 1 and g.positive_count == 1
    assert g.counters["duplicates"] == 1


@pytest.mark.parametrize("policy,expected", [("negative-wins", [-1]), ("drop", []), ("first-wins", [1])])
def test_symmetrize_conflict_policies(policy, expected):
    g = symmetrize([0, 1], [1, 0], [1, -1], policy=policy)
    assert g.sign.tolist() == expected
    assert g.counters["conflicts"] == 1


def test_adjacency_is_symmetric():
    g = balanced_communities(60, 3, 0.3, 0.05, seed=1)
    for v in range(g.node_count):
        for s in (1, -1):
            for u in neighbors(g, v, s):
                assert v in neighbors(g, int(u), s)


edge_lists = st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7), st.sampled_from([1, -1])), max_size=40)


@settings(max_examples=200, deadline=None)
@given(edge_lists, st.sampled_from(["negative-wins", "drop", "first-wins"]))
def test_symmetrize_idempotent(edges, policy):
    e = np.array(edges, dtype=np.int64).reshape(-1, 3)
    once = symmetrize(e[:, 0], e[:, 1], e[:, 2], 8, policy)
    twice = symmetrize(once.src, once.dst, once.sign, 8, policy)
    assert np.array_equal(once.src, twice.src)
    assert np.array_equal(once.dst, twice.dst)
    assert np.array_equal(once.sign, twice.sign)
    # undirected and duplicate-free
    assert len(set(once.edge_keys().tolist())) == once.edge_count


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_write_read_round_trip(edges):
    e = np.array(edges, dtype=np.int64).reshape(-1, 3)
    g = symmetrize(e[:, 0], e[:, 1], e[:, 2], 8, labels=[f"n{i}" for i in range(8)])
    buf = io.StringIO()
    write_edge_list(g, buf)
    back = load_edge_list(io.StringIO(buf.getvalue()))
    assert back.labels == g.labels
    assert np.array_equal(back.src, g.src) and np.array_equal(back.dst, g.dst)
    assert np.array_equal(back.sign, g.sign)


def test_neighbors():
    g = make_graph([(0, 1, 1), (0, 2, -1)])
    assert neighbors(g, 0, 1).tolist() == [1]
    assert neighbors(g, 0, -1).tolist() == [2]
    assert neighbors(g, 1, -1).tolist() == []
    with pytest.raises(IndexError):
        neighbors(g, 3, 1)


def test_neighbors_sorted():
    g = make_graph([(0, 5, 1), (0, 2, 1), (0, 4, 1), (3, 0, 1)])
    assert neighbors(g, 0, 1).tolist() == [2, 3, 4, 5]


def _chain_graph(m):
    # m edges on a path, alternating signs
    idx = np.arange(m)
    return make_graph(np.stack([idx, idx + 1, np.where(idx % 2 == 0, 1, -1)], axis=1))


def test_split_counts():
    b = split_edges(_chain_graph(100), (0.8, 0.1, 0.1), seed=3)
    assert b.counts == {"train": 80, "validation": 10, "test": 10}


def test_split_largest_remainder():
    b = split_edges(_chain_graph(7), (0.5, 0.25, 0.25), seed=0)
    # exact 3.5 / 1.75 / 1.75 -> floors 3/1/1; remainders .5/.75/.75 take the two leftovers
    assert b.counts == {"train": 3, "validation": 2, "test": 2}


def test_split_deterministic():
    g = _chain_graph(100)
    a = split_edges(g, seed=11)
    b = split_edges(g, seed=11)
    c = split_edges(g, seed=12)
    assert np.array_equal(a.test.edge_keys(), b.test.edge_keys())
    assert not np.array_equal(a.test.edge_keys(), c.test.edge_keys())


def test_split_reconstruction_ratios():
    g = _chain_graph(30)
    b = split_edges(g, (1, 0, 0), seed=0)
    assert b.train.edge_count == 30
    assert b.validation.edge_count == 0 and b.test.edge_count == 0


@pytest.mark.parametrize("ratios", [(0.8, 0.1, 0.2), (0.0, 0.5, 0.5), (1.0, 0.1, -0.1)])
def test_split_bad_ratios(ratios):
    with pytest.raises(ValueError):
        split_edges(_chain_graph(10), ratios)


def test_split_refuses_single_sign_training():
    g = make_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, -1)])
    with pytest.raises(ValueError):
        for seed in range(50):
            split_edges(g, (0.5, 0.25, 0.25), seed=seed)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("stratify", [False, True])
def test_split_partition_property(seed, stratify):
    g = balanced_communities(80, 4, 0.3, 0.05, seed=seed)
    b = split_edges(g, (0.8, 0.1, 0.1), seed=seed, stratify=stratify)
    keys = [set(p.edge_keys().tolist()) for p in (b.train, b.validation, b.test)]
    assert sum(len(k) for k in keys) == g.edge_count
    assert not (keys[0] & keys[1]) and not (keys[0] & keys[2]) and not (keys[1] & keys[2])
    assert set().union(*keys) == set(g.edge_keys().tolist())


def test_split_stratified_per_sign():
    g = balanced_communities(100, 4, 0.3, 0.05, seed=2)
    b = split_edges(g, (0.8, 0.1, 0.1), seed=0, stratify=True)
    assert abs(b.test.negative_count - 0.1 * g.negative_count) <= 1


def test_degree_stats_star():
    g = make_graph([(0, i, 1) for i in range(1, 10)])
    pos, neg = degree_stats(g)
    assert pos == {1: 9, 9: 1}
    assert neg == {0: 10}


def test_degree_stats_empty_graph():
    g = make_graph([], n=5)
    assert degree_stats(g) == ({0: 5}, {0: 5})


def test_degree_stats_single_negative_edge():
    pos, neg = degree_stats(make_graph([(0, 1, -1)]))
    assert neg == {1: 2} and pos == {0: 2}


@pytest.mark.parametrize("seed", range(3))
def test_degree_handshake(seed):
    g = balanced_communities(90, 3, 0.2, 0.05, seed=seed)
    pos, neg = degree_stats(g)
    assert sum(d * c for d, c in pos.items()) == 2 * g.positive_count
    assert sum(d * c for d, c in neg.items()) == 2 * g.negative_count
    assert sum(pos.values()) == sum(neg.values()) == g.node_count

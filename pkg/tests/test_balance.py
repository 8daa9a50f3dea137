import logging

import numpy as np
import pytest

from citepref.balance import (
    balance_counts,
    balance_report,
    classify_weak_balance,
    edge_signs,
    enumerate_transitive_semicycles,
    mean_node_balance,
    node_balance_fraction,
    randomize_signed,
)
from citepref.errors import ConfigError, DataError
from citepref.network import SignedDigraphSnapshot


def brute_force_balance(signs, nodes):
    """O(N^3) scan over all ordered triples."""
    nodes = sorted(nodes)
    n = len(nodes)
    idx = {c: i for i, c in enumerate(nodes)}
    s = np.zeros((n, n), dtype=int)
    for (a, b), sign in signs.items():
        s[idx[a], idx[b]] = sign
    present = s != 0
    triple = present[:, :, None] & present[None, :, :] & present[:, None, :]
    neg = (s < 0).astype(int)
    neg_count = neg[:, :, None] + neg[None, :, :] + neg[:, None, :]
    balanced_mask = triple & (neg_count != 1)
    fractions = {}
    for i, c in enumerate(nodes):
        part = triple[i].sum() + triple[:, i, :].sum() + triple[:, :, i].sum()
        good = (balanced_mask[i].sum() + balanced_mask[:, i, :].sum()
                + balanced_mask[:, :, i].sum())
        if part:
            fractions[c] = good / part
    return int(triple.sum()), int(balanced_mask.sum()), fractions


def random_signed_graph(rng, n_nodes, p_edge=0.15, p_negative=0.5):
    nodes = [f"N{i:02d}" for i in range(n_nodes)]
    signs = {}
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i != j and rng.random() < p_edge:
                signs[(nodes[i], nodes[j])] = -1 if rng.random() < p_negative else 1
    return nodes, signs


def test_single_transitive_semicycle():
    signs = {("A", "B"): 1, ("B", "C"): 1, ("A", "C"): 1}
    cycles = list(enumerate_transitive_semicycles(signs))
    assert cycles == [("A", "B", "C", (1, 1, 1))]


def test_directed_three_cycle_has_no_transitive_semicycle():
    signs = {("A", "B"): 1, ("B", "C"): 1, ("C", "A"): 1}
    assert list(enumerate_transitive_semicycles(signs)) == []
    cyclic = list(enumerate_transitive_semicycles(signs, closure="cyclic"))
    assert cyclic == [("A", "B", "C", (1, 1, 1))]


def test_complete_bidirectional_triangle_has_six():
    signs = {}
    for a in "ABC":
        for b in "ABC":
            if a != b:
                signs[(a, b)] = 1
    assert len(list(enumerate_transitive_semicycles(signs))) == 6


def test_unknown_closure_mode():
    with pytest.raises(ConfigError):
        list(enumerate_transitive_semicycles({}, closure="loop"))


def test_weak_balance_classification():
    assert classify_weak_balance((1, 1, -1)) is False
    assert classify_weak_balance((-1, -1, -1)) is True
    assert classify_weak_balance((1, 1, 1)) is True
    assert classify_weak_balance((-1, -1, 1)) is True


def test_weak_balance_rejects_invalid_signs():
    with pytest.raises(DataError):
        classify_weak_balance((1, 0, -1))
    with pytest.raises(DataError):
        classify_weak_balance((1, 1))


def test_edge_signs_accepts_snapshot_and_aggregate_values():
    snap = SignedDigraphSnapshot(2000, frozenset("AB"), {("A", "B"): -1})
    assert edge_signs(snap) == {("A", "B"): -1}
    assert edge_signs({("A", "B"): (1, 2010)}) == {("A", "B"): 1}
    with pytest.raises(DataError):
        edge_signs({("A", "B"): 2})


def test_node_fractions_all_positive():
    signs = {("A", "B"): 1, ("B", "C"): 1, ("A", "C"): 1, ("C", "D"): 1,
             ("B", "D"): 1}
    fractions = node_balance_fraction(signs)
    assert set(fractions) == {"A", "B", "C", "D"}
    assert all(v == 1.0 for v in fractions.values())


def test_node_fractions_single_unbalanced_triad():
    signs = {("A", "B"): 1, ("B", "C"): 1, ("A", "C"): -1}
    assert node_balance_fraction(signs) == {"A": 0.0, "B": 0.0, "C": 0.0}


def test_counts_and_fractions_match_brute_force():
    rng = np.random.default_rng(61)
    for _ in range(20):
        n = int(rng.integers(5, 30))
        nodes, signs = random_signed_graph(rng, n)
        total, balanced, unbalanced = balance_counts(signs)
        bf_total, bf_balanced, bf_fractions = brute_force_balance(signs, nodes)
        assert total == bf_total
        assert balanced == bf_balanced
        assert balanced + unbalanced == total
        fractions = node_balance_fraction(signs)
        assert set(fractions) == set(bf_fractions)
        for c, v in fractions.items():
            assert v == pytest.approx(bf_fractions[c], abs=1e-12)


def signed_degrees(signs, nodes):
    deg = {c: [0, 0, 0, 0] for c in nodes}
    for (a, b), s in signs.items():
        if s > 0:
            deg[a][0] += 1
            deg[b][1] += 1
        else:
            deg[a][2] += 1
            deg[b][3] += 1
    return deg


def test_randomize_preserves_signed_degrees_exactly():
    rng = np.random.default_rng(71)
    nodes, signs = random_signed_graph(rng, 20, p_edge=0.25)
    original = signed_degrees(signs, nodes)
    for member in randomize_signed(signs, n_networks=10, seed=3):
        assert len(member) == len(signs)
        assert signed_degrees(member, nodes) == original


def test_randomize_single_edge_classes_unchanged(caplog):
    signs = {("A", "B"): 1, ("C", "D"): -1}
    with caplog.at_level(logging.WARNING, logger="citepref.balance"):
        ensemble = randomize_signed(signs, n_networks=5, seed=0)
    assert all(member == signs for member in ensemble)
    assert "cannot be rewired" in caplog.text


def test_randomize_never_creates_cross_sign_duplicates():
    rng = np.random.default_rng(83)
    nodes, signs = random_signed_graph(rng, 15, p_edge=0.3)
    n_pos = sum(1 for s in signs.values() if s > 0)
    for member in randomize_signed(signs, n_networks=20, seed=9):
        assert len(member) == len(signs)
        assert sum(1 for s in member.values() if s > 0) == n_pos


def test_randomize_deterministic_and_thread_invariant():
    rng = np.random.default_rng(19)
    nodes, signs = random_signed_graph(rng, 12, p_edge=0.3)
    a = randomize_signed(signs, n_networks=8, seed=4)
    b = randomize_signed(signs, n_networks=8, seed=4)
    c = randomize_signed(signs, n_networks=8, seed=4, threads=4)
    assert a == b == c


def planted_two_faction_graph(rng, n_nodes=30, p_edge=0.3):
    nodes = [f"N{i:02d}" for i in range(n_nodes)]
    signs = {}
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i != j and rng.random() < p_edge:
                same = (i < n_nodes // 2) == (j < n_nodes // 2)
                signs[(nodes[i], nodes[j])] = 1 if same else -1
    return signs


def test_planted_balanced_graph_degrades_under_rewiring():
    rng = np.random.default_rng(13)
    signs = planted_two_faction_graph(rng)
    assert mean_node_balance(signs) == 1.0
    report = balance_report(signs, n_networks=20, seed=2)
    assert report.balanced == report.total_semicycles
    assert all(v == 1.0 for v in report.node_fraction.values())
    below = sum(1 for v in report.ensemble_values if v < 1.0)
    assert below >= 18
    assert report.ensemble_mean < 1.0


def test_balance_report_counts_are_consistent():
    rng = np.random.default_rng(29)
    _, signs = random_signed_graph(rng, 14, p_edge=0.3)
    report = balance_report(signs, n_networks=5, seed=1)
    assert report.balanced + report.unbalanced == report.total_semicycles
    assert len(report.ensemble_values) <= 5

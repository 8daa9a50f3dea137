"""Structural balance of signed directed networks.

The unit of classification is the transitive semi-cycle: an ordered node
triple with edges i -> j, j -> k and the shortcut i -> k.  Under weak
structural balance a semi-cycle is unbalanced exactly when one of its
three signs is negative; zero, two, or three negative signs are balanced.
Observed balance is compared against an ensemble of rewired networks that
preserve every node's signed in- and out-degrees exactly (independent
directed double-edge swaps within each sign class).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger("citepref.balance")


@dataclass
class BalanceReport:
    total_semicycles: int
    balanced: int
    unbalanced: int
    node_fraction: dict  # node -> fraction of balanced semi-cycles
    ensemble_mean: float | None
    ensemble_std: float | None
    ensemble_values: tuple = ()


def edge_signs(graph):
    """Normalize a snapshot, aggregate network, or plain mapping to a
    dict (source, target) -> sign."""
    edges = graph.edges if hasattr(graph, "edges") else graph
    out = {}
    for edge, value in edges.items():
        sign = value[0] if isinstance(value, tuple) else value
        if sign not in (-1, 1):
            raise DataError(f"edge {edge} has sign {sign!r}, expected -1 or +1")
        out[edge] = sign
    return out


def enumerate_transitive_semicycles(graph, closure="transitive"):
    """Yield (i, j, k, (sign_ij, sign_jk, sign_ik)) triples exactly once.

    ``closure="cyclic"`` instead yields semi-cycles whose closing edge is
    reversed (i -> j, j -> k, k -> i), canonicalized so that i is the
    smallest node of the cycle.
    """
    if closure not in ("transitive", "cyclic"):
        raise ConfigError(f"unknown closure mode {closure!r}")
    signs = edge_signs(graph)
    successors = {}
    for (s, t) in signs:
        successors.setdefault(s, []).append(t)
    for s in successors:
        successors[s].sort()
    for i, j in sorted(signs):
        for k in successors.get(j, ()):
            if closure == "transitive":
                closing = (i, k)
                if k != i and closing in signs:
                    yield i, j, k, (signs[(i, j)], signs[(j, k)], signs[closing])
            else:
                closing = (k, i)
                if k != i and i < j and i < k and closing in signs:
                    yield i, j, k, (signs[(i, j)], signs[(j, k)], signs[closing])


def classify_weak_balance(signs):
    """True when the semi-cycle is weakly balanced (not exactly one
    negative sign)."""
    if len(signs) != 3 or any(s not in (-1, 1) for s in signs):
        raise DataError(f"expected three signs in -1/+1, got {signs!r}")
    return sum(1 for s in signs if s < 0) != 1


def balance_counts(graph, closure="transitive"):
    total = balanced = 0
    for *_, signs in enumerate_transitive_semicycles(graph, closure):
        total += 1
        balanced += classify_weak_balance(signs)
    return total, balanced, total - balanced


def node_balance_fraction(graph, closure="transitive"):
    """Per node: balanced semi-cycles it participates in over all
    semi-cycles it participates in; nodes in none are omitted."""
    totals = {}
    balanced = {}
    for i, j, k, signs in enumerate_transitive_semicycles(graph, closure):
        ok = classify_weak_balance(signs)
        for node in {i, j, k}:
            totals[node] = totals.get(node, 0) + 1
            balanced[node] = balanced.get(node, 0) + ok
    return {node: balanced[node] / totals[node] for node in sorted(totals)}


def _swap_class(edges, other_class, swaps_per_edge, rng):
    """Directed double-edge swaps within one sign class.

    A proposal replaces (a, b), (c, d) with (a, d), (c, b); it is
    rejected if it would create a self-loop, a duplicate within the
    class, or an edge already present in the other sign class.
    """
    edges = list(edges)
    if len(edges) < 2:
        logger.warning(
            "sign class with %d edge(s) cannot be rewired; returned unchanged",
            len(edges),
        )
        return edges
    present = set(edges)
    n_attempts = swaps_per_edge * len(edges)
    for _ in range(n_attempts):
        e1, e2 = rng.choice(len(edges), size=2, replace=False)
        a, b = edges[e1]
        c, d = edges[e2]
        new1, new2 = (a, d), (c, b)
        if a == d or c == b or new1 == new2:
            continue
        if new1 in present or new2 in present:
            continue
        if new1 in other_class or new2 in other_class:
            continue
        present.discard((a, b))
        present.discard((c, d))
        present.add(new1)
        present.add(new2)
        edges[e1] = new1
        edges[e2] = new2
    return edges


def randomize_signed(graph, n_networks=100, swaps_per_edge=20, seed=0,
                     threads=1):
    """Ensemble of sign-class rewirings preserving all four signed degree
    components (out+, in+, out-, in-) of every node exactly."""
    signs = edge_signs(graph)
    positive = sorted(e for e, s in signs.items() if s > 0)
    negative = sorted(e for e, s in signs.items() if s < 0)
    streams = np.random.SeedSequence(seed).spawn(n_networks)

    def build(member):
        rng = np.random.default_rng(streams[member])
        new_pos = _swap_class(positive, set(negative), swaps_per_edge, rng)
        new_neg = _swap_class(negative, set(new_pos), swaps_per_edge, rng)
        member_edges = {e: 1 for e in new_pos}
        member_edges.update({e: -1 for e in new_neg})
        return member_edges

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(build, range(n_networks)))
    return [build(i) for i in range(n_networks)]


def mean_node_balance(graph, closure="transitive"):
    fractions = node_balance_fraction(graph, closure)
    if not fractions:
        return None
    return float(np.mean(list(fractions.values())))


def balance_report(graph, n_networks=100, swaps_per_edge=20, seed=0,
                   closure="transitive", threads=1):
    """Observed balance plus the rewired-ensemble comparison.

    The ensemble statistic is the node-level mean balance fraction;
    members whose rewired graph contains no semi-cycle are skipped.
    """
    total, balanced, unbalanced = balance_counts(graph, closure)
    fractions = node_balance_fraction(graph, closure)
    values = []
    for member in randomize_signed(graph, n_networks, swaps_per_edge, seed,
                                   threads):
        value = mean_node_balance(member, closure)
        if value is not None:
            values.append(value)
    mean = float(np.mean(values)) if values else None
    std = float(np.std(values, ddof=1)) if len(values) > 1 else None
    return BalanceReport(
        total_semicycles=total,
        balanced=balanced,
        unbalanced=unbalanced,
        node_fraction=fractions,
        ensemble_mean=mean,
        ensemble_std=std,
        ensemble_values=tuple(values),
    )

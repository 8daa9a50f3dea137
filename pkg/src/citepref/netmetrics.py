"""Centrality, inequality, and community-conditioned link statistics.

Centrality is PageRank on the positive subgraph of a snapshot with
damping 0.85, so recognition flows from citer to cited country.  The
concentration of centrality is summarized by the Shannon entropy of the
PageRank vector normalized by its maximum ln N: values near 0 indicate a
dominant core, values near 1 an even spread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, UndefinedMeasureError


@dataclass
class CentralityVector:
    year: int
    scores: dict  # country -> probability
    damping: float


@dataclass
class CommunityLinkStats:
    year: int
    partition_id: str
    matrix: dict  # (block r, block s, sign) -> probability


def positive_subgraph(snapshot):
    """Nodes and edge list of the positive part of a snapshot."""
    edges = sorted(snapshot.positive_edges())
    nodes = sorted({c for e in edges for c in e})
    return nodes, edges


def pagerank(nodes, edges, damping=0.85, tol=1e-12, year=0, max_iter=10000):
    """Power-iteration PageRank with uniform teleportation.

    Dangling nodes redistribute their mass uniformly; iteration stops
    when the L1 change drops below ``tol``.  The result is independent of
    node insertion order.
    """
    nodes = sorted(set(nodes))
    n = len(nodes)
    if n == 0:
        raise UndefinedMeasureError("PageRank undefined on an empty graph")
    index = {c: i for i, c in enumerate(nodes)}
    out_degree = np.zeros(n)
    targets = [[] for _ in range(n)]
    for s, t in set(edges):
        if s not in index or t not in index:
            raise DataError(f"edge endpoint {s!r} or {t!r} not in node set")
        out_degree[index[s]] += 1
        targets[index[s]].append(index[t])

    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        flow = np.zeros(n)
        dangling_mass = 0.0
        for i in range(n):
            if out_degree[i] == 0:
                dangling_mass += pi[i]
            else:
                share = pi[i] / out_degree[i]
                for j in targets[i]:
                    flow[j] += share
        new = (1.0 - damping) / n + damping * (flow + dangling_mass / n)
        if np.abs(new - pi).sum() < tol:
            pi = new
            break
        pi = new
    else:
        raise NumericError(f"PageRank failed to converge in {max_iter} iterations")
    return CentralityVector(year, {c: float(pi[index[c]]) for c in nodes}, damping)


def normalized_entropy(scores):
    """Shannon entropy over N outcomes divided by ln N, with 0 ln 0 := 0."""
    if isinstance(scores, dict):
        p = np.array([scores[k] for k in sorted(scores)], dtype=float)
    else:
        p = np.asarray(scores, dtype=float)
    if len(p) < 2:
        raise UndefinedMeasureError(
            f"normalized entropy undefined for {len(p)} outcomes"
        )
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise UndefinedMeasureError("scores must form a probability vector")
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    return h / np.log(len(p))


def community_link_probability(snapshot, labels, sign):
    """P(r -> s, sign): signed-edge count over ordered node pairs.

    ``labels`` maps every snapshot node to its block; block pairs without
    any ordered node pair (a singleton diagonal) are omitted.
    """
    for node in sorted(snapshot.nodes):
        if node not in labels:
            raise DataError(f"node {node!r} has no block label")
    sizes = {}
    for node in snapshot.nodes:
        b = labels[node]
        sizes[b] = sizes.get(b, 0) + 1
    counts = {}
    for (s, t), edge_sign in snapshot.edges.items():
        if edge_sign == sign:
            key = (labels[s], labels[t])
            counts[key] = counts.get(key, 0) + 1
    matrix = {}
    blocks = sorted(sizes)
    for r in blocks:
        for s in blocks:
            pairs = sizes[r] * sizes[s] - (sizes[r] if r == s else 0)
            if pairs == 0:
                continue
            matrix[(r, s, sign)] = counts.get((r, s), 0) / pairs
    return CommunityLinkStats(snapshot.year, "-".join(map(str, blocks)), matrix)

"""Significance-filtered signed citation-preference networks.

Per-year preference scores become a signed directed snapshot: an edge
source -> target carries +1 when the source significantly over-cites the
target and -1 when it significantly under-cites it, with family-wise
error controlled by the Holm step-down procedure (Holm 1979) at a default
alpha of 0.01.  One family is one year's international score list;
self-preference scores form their own per-year family.  Snapshots union
into an aggregate network where each edge adopts the sign of the most
recent slice containing it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import DataError


@dataclass
class SignedDigraphSnapshot:
    year: int
    nodes: frozenset
    edges: dict  # (source, target) -> -1 | +1

    def positive_edges(self):
        return {e for e, s in self.edges.items() if s > 0}

    def negative_edges(self):
        return {e for e, s in self.edges.items() if s < 0}


@dataclass
class AggregateNetwork:
    nodes: frozenset
    edges: dict  # (source, target) -> (sign, last_year)

    def to_snapshots(self):
        """Rebuild a minimal time-ordered snapshot list: one snapshot per
        distinct last_year, carrying the edges last seen in that year."""
        by_year = {}
        for (s, t), (sign, year) in self.edges.items():
            by_year.setdefault(year, {})[(s, t)] = sign
        out = []
        for year in sorted(by_year):
            edges = by_year[year]
            nodes = frozenset(c for e in edges for c in e)
            out.append(SignedDigraphSnapshot(year, nodes, edges))
        return out


def holm_filter(scores, alpha=0.01):
    """Fill p_adjusted and sign for one family of preference scores.

    Step-down adjustment: on p sorted ascending, p_adj(i) is the running
    maximum of min(1, (m - j + 1) * p(j)) for j <= i.  The sign is
    sgn(auc - 0.5) where p_adjusted <= alpha, else 0.  Input order is
    preserved; ties in p_raw sort by (source, target) for determinism.
    """
    if not scores:
        return []
    m = len(scores)
    order = sorted(range(m), key=lambda i: (scores[i].p_raw,
                                            scores[i].source,
                                            scores[i].target))
    out = [None] * m
    running = 0.0
    for j, i in enumerate(order):
        score = scores[i]
        running = max(running, min(1.0, (m - j) * score.p_raw))
        if running <= alpha and score.auc != 0.5:
            sign = 1 if score.auc > 0.5 else -1
        else:
            sign = 0
        out[i] = replace(score, p_adjusted=running, sign=sign)
    return out


def build_snapshot(scores, year):
    """Signed snapshot from Holm-filtered scores of one year.

    Nodes are the countries incident to at least one signed edge;
    self-preference pairs never become edges.
    """
    edges = {}
    for s in scores:
        if s.year != year or s.sign == 0 or s.source == s.target:
            continue
        edges[(s.source, s.target)] = s.sign
    nodes = frozenset(c for e in edges for c in e)
    return SignedDigraphSnapshot(year, nodes, edges)


def aggregate(snapshots):
    """Union of time-ordered snapshots; each edge keeps the sign and year
    of its most recent occurrence."""
    edges = {}
    nodes = set()
    for snap in sorted(snapshots, key=lambda s: s.year):
        nodes.update(snap.nodes)
        for edge, sign in snap.edges.items():
            edges[edge] = (sign, snap.year)
    return AggregateNetwork(frozenset(nodes), edges)


def persistence(snapshots):
    """Fraction of each year's positive edges reappearing as positive in
    the next snapshot; a year without positive edges yields None."""
    snaps = sorted(snapshots, key=lambda s: s.year)
    if len(snaps) < 2:
        raise DataError("persistence needs at least two snapshots")
    out = {}
    for prev, curr in zip(snaps, snaps[1:]):
        pos = prev.positive_edges()
        if not pos:
            out[prev.year] = None
        else:
            out[prev.year] = len(pos & curr.positive_edges()) / len(pos)
    return out


def sign_flips(snapshots):
    """Sign-change histories across an edge's successive appearances.

    Returns (source, target) -> list of (year, sign) with one entry per
    sign change (the first appearance included); edges with a constant
    sign are omitted.
    """
    history = {}
    for snap in sorted(snapshots, key=lambda s: s.year):
        for edge, sign in snap.edges.items():
            seq = history.setdefault(edge, [])
            if not seq or seq[-1][1] != sign:
                seq.append((snap.year, sign))
    return {edge: seq for edge, seq in sorted(history.items()) if len(seq) > 1}


def positive_to_negative_flips(snapshots):
    """Edges whose sign ever switches from +1 to -1 between successive
    appearances, in sorted order."""
    out = []
    for edge, seq in sign_flips(snapshots).items():
        signs = [s for _, s in seq]
        if any(a > 0 > b for a, b in zip(signs, signs[1:])):
            out.append(edge)
    return out


def snapshot_json(snapshot):
    """JSON graph document (nodes array, links array with sign)."""
    return {
        "directed": True,
        "year": snapshot.year,
        "nodes": [{"id": c} for c in sorted(snapshot.nodes)],
        "links": [
            {"source": s, "target": t, "sign": snapshot.edges[(s, t)]}
            for s, t in sorted(snapshot.edges)
        ],
    }


def aggregate_json(network):
    return {
        "directed": True,
        "nodes": [{"id": c} for c in sorted(network.nodes)],
        "links": [
            {
                "source": s,
                "target": t,
                "sign": network.edges[(s, t)][0],
                "last_year": network.edges[(s, t)][1],
            }
            for s, t in sorted(network.edges)
        ],
    }

"""Rank-based national citation preference.

For a citing country and publication year, all publications the country
cited at least once within the window are ranked by the country-specific
citation total c5.  The preference of the citing country for a target
country is the AUC: the probability that a randomly chosen target-country
publication outranks a randomly chosen other publication, with ties
credited one half.  The AUC is tested against the no-preference null of
0.5 with the DeLong variance (DeLong, DeLong & Clarke-Pearson 1988),
computed with the fast placement algorithm of Sun & Xu (2014).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .corpus import compute_windowed_counts
from .errors import UndefinedMeasureError


@dataclass(frozen=True)
class RankingEntry:
    cited_pub_id: str
    cited_countries: frozenset
    c5: int


@dataclass(frozen=True)
class RankingSet:
    citing_country: str
    year: int
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def values(self):
        return np.array([e.c5 for e in self.entries], dtype=float)

    def ranks(self):
        """Descending midranks: rank 1 is the most-cited publication."""
        v = self.values()
        return len(v) + 1.0 - stats.rankdata(v)

    def target_mask(self, target):
        return np.array([target in e.cited_countries for e in self.entries])

    def class_values(self, target):
        v = self.values()
        mask = self.target_mask(target)
        return v[mask], v[~mask]


@dataclass(frozen=True)
class PreferenceScore:
    year: int
    source: str
    target: str
    n_target: int
    n_other: int
    auc: float
    u_stat: float
    var_delong: float
    p_raw: float
    p_adjusted: float | None = None
    sign: int = 0


def build_ranking(corpus, citing_country, year, window=5):
    """Ranking set of one citing country for publications of one year.

    Entries are sorted by descending c5 (pub_id breaks ties); an absent
    country yields an empty set.
    """
    entries = []
    for w in compute_windowed_counts(corpus, year, window):
        if w.citing_country != citing_country:
            continue
        countries = corpus.publications[w.cited_pub_id].countries
        entries.append(RankingEntry(w.cited_pub_id, countries, w.c5))
    entries.sort(key=lambda e: (-e.c5, e.cited_pub_id))
    return RankingSet(citing_country, year, tuple(entries))


def auc_from_values(target_values, other_values):
    """Midrank AUC and Mann-Whitney U for two value arrays."""
    x = np.asarray(target_values, dtype=float)
    y = np.asarray(other_values, dtype=float)
    m, n = len(x), len(y)
    if m == 0 or n == 0:
        raise UndefinedMeasureError(
            f"AUC undefined for class sizes {m} and {n}"
        )
    tz = stats.rankdata(np.concatenate([x, y]))
    u_stat = float(tz[:m].sum() - m * (m + 1) / 2.0)
    return u_stat / (m * n), u_stat


def delong_from_values(target_values, other_values):
    """DeLong variance of the AUC and the two-sided test against 0.5.

    Placement values follow Sun & Xu (2014): one ranking pass over the
    combined sample and one per class.  Degenerate variance resolves by
    fiat: var = 0 with auc = 0.5 gives p = 1, var = 0 with auc != 0.5
    gives p = 0.
    """
    x = np.asarray(target_values, dtype=float)
    y = np.asarray(other_values, dtype=float)
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        raise UndefinedMeasureError(
            f"DeLong variance needs >= 2 per class, got {m} and {n}"
        )
    tz = stats.rankdata(np.concatenate([x, y]))
    tx = stats.rankdata(x)
    ty = stats.rankdata(y)
    v10 = (tz[:m] - tx) / n
    v01 = 1.0 - (tz[m:] - ty) / m
    auc = float(v10.mean())
    var = float(v10.var(ddof=1) / m + v01.var(ddof=1) / n)
    if var <= 0.0:
        var = 0.0
        if auc == 0.5:
            return 0.0, 0.0, 1.0
        return 0.0, float(np.sign(auc - 0.5) * np.inf), 0.0
    z = (auc - 0.5) / np.sqrt(var)
    p_raw = float(2.0 * stats.norm.sf(abs(z)))
    return var, float(z), p_raw


def auc_preference(ranking, target):
    """AUC of the target country within one ranking set."""
    x, y = ranking.class_values(target)
    auc, u_stat = auc_from_values(x, y)
    return auc, u_stat, len(x), len(y)


def delong_test(ranking, target):
    """DeLong test of the target country's AUC against 0.5."""
    x, y = ranking.class_values(target)
    return delong_from_values(x, y)


def score_pair(ranking, target):
    """Full PreferenceScore for one (citing, target) pair; p_adjusted and
    sign are filled later by the network-building step."""
    auc, u_stat, n_target, n_other = auc_preference(ranking, target)
    var, _, p_raw = delong_test(ranking, target)
    return PreferenceScore(
        year=ranking.year,
        source=ranking.citing_country,
        target=target,
        n_target=n_target,
        n_other=n_other,
        auc=auc,
        u_stat=u_stat,
        var_delong=var,
        p_raw=p_raw,
    )


def self_preference(corpus, country, year, window=5):
    """Preference of a country for its own publications."""
    ranking = build_ranking(corpus, country, year, window)
    return score_pair(ranking, country)


def _score_source(corpus, source, year, min_cited, window, diagnostics):
    ranking = build_ranking(corpus, source, year, window)
    counts = {}
    for entry in ranking.entries:
        for country in entry.cited_countries:
            counts[country] = counts.get(country, 0) + 1
    scores = []
    for target in sorted(counts):
        n_target = counts[target]
        if n_target < min_cited:
            continue
        n_other = len(ranking) - n_target
        if n_target < 2 or n_other < 2:
            if diagnostics is not None:
                diagnostics["skipped_degenerate"] = (
                    diagnostics.get("skipped_degenerate", 0) + 1
                )
            continue
        scores.append(score_pair(ranking, target))
    return scores


def preference_matrix(corpus, year, min_cited=50, window=5, threads=1,
                      diagnostics=None):
    """All qualifying (source, target) preference scores for one year.

    A pair qualifies when the target country has at least ``min_cited``
    publications in the source's ranking set.  Pairs with a degenerate
    class split (fewer than two publications on either side) are skipped
    and counted in ``diagnostics`` when a dict is supplied.  Output order
    is (source, target), independent of the thread schedule.
    """
    sources = sorted(
        {w.citing_country for w in compute_windowed_counts(corpus, year, window)}
    )

    def work(source):
        return _score_source(corpus, source, year, min_cited, window, diagnostics)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, sources))
    else:
        chunks = [work(s) for s in sources]
    return [score for chunk in chunks for score in chunk]

"""Publication/citation corpus: loading, validation, country attribution,
self-link filtering, and windowed citation counts.

Input files are tab-separated UTF-8 with a header row; multi-valued cells
use "|" separators.  Publications without any country affiliation are
dropped at load time and reported.  Citation links between publications
that share an author or an affiliation can be removed with
``filter_self_links`` (self-citation control).

The citation window is inclusive of the publication year: a publication
from year ``y`` collects citations from citing publications dated within
``[y, y + window]``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError

_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")

PUBLICATION_COLUMNS = [
    "pub_id",
    "year",
    "venue_id",
    "field_id",
    "concept_ids",
    "countries",
    "author_ids",
    "affiliation_ids",
]
# Optional trailing columns carrying the text used by the idea pipeline.
PUBLICATION_TEXT_COLUMNS = ["title", "abstract"]

CITATION_COLUMNS = ["citing_pub_id", "cited_pub_id"]

COVARIATE_CY_COLUMNS = [
    "country",
    "year",
    "gdp_pc",
    "gni",
    "population",
    "rd_gdp_pct",
    "democracy",
    "patents_resident",
    "patents_total",
]

COVARIATE_DYAD_COLUMNS = [
    "origin",
    "destination",
    "distance_km",
    "same_continent",
    "same_language",
    "trade_volume",
    "sta_flag",
]


@dataclass(frozen=True)
class PublicationRecord:
    pub_id: str
    year: int
    venue_id: str
    field_id: str
    concept_ids: frozenset
    countries: frozenset
    author_ids: frozenset
    affiliation_ids: frozenset
    title: str = ""
    abstract: str = ""


@dataclass(frozen=True)
class CitationLink:
    citing_pub_id: str
    cited_pub_id: str


@dataclass(frozen=True)
class WindowedCount:
    cited_pub_id: str
    citing_country: str
    publication_year: int
    c5: int


@dataclass(frozen=True)
class CountryYearCovariates:
    country: str
    year: int
    gdp_pc: float | None
    gni: float | None
    population: float | None
    rd_gdp_pct: float | None
    democracy: float | None
    patents_resident: float | None
    patents_total: float | None


@dataclass(frozen=True)
class DyadCovariates:
    origin: str
    destination: str
    distance_km: float | None
    same_continent: int | None
    same_language: int | None
    trade_volume: float | None
    sta_flag: int | None


@dataclass
class LoadReport:
    n_publications: int = 0
    n_citations: int = 0
    dropped_no_country: int = 0
    dropped_unresolved_citations: int = 0
    removed_self_links: int = 0

    def as_dict(self):
        return {
            "n_publications": self.n_publications,
            "n_citations": self.n_citations,
            "dropped_no_country": self.dropped_no_country,
            "dropped_unresolved_citations": self.dropped_unresolved_citations,
            "removed_self_links": self.removed_self_links,
        }


class Corpus:
    """Immutable indexed view over publications and citation links.

    Safe to share across threads once constructed; windowed-count caches
    are pure functions of the corpus content.
    """

    def __init__(self, publications, citations, report):
        self.publications = dict(publications)
        self.citations = tuple(citations)
        self.report = report
        self._in_citations = None
        self._window_cache = {}

    @property
    def years(self):
        return sorted({p.year for p in self.publications.values()})

    @property
    def countries(self):
        out = set()
        for p in self.publications.values():
            out.update(p.countries)
        return sorted(out)

    def in_citations(self, pub_id):
        """Citing pub ids for one cited publication."""
        if self._in_citations is None:
            index = {}
            for link in self.citations:
                index.setdefault(link.cited_pub_id, []).append(link.citing_pub_id)
            self._in_citations = {k: tuple(v) for k, v in index.items()}
        return self._in_citations.get(pub_id, ())

    def digest(self):
        """Content digest; identical inputs yield identical digests."""
        h = hashlib.sha256()
        for pid in sorted(self.publications):
            p = self.publications[pid]
            h.update(
                "\x1f".join(
                    [
                        p.pub_id,
                        str(p.year),
                        p.venue_id,
                        p.field_id,
                        "|".join(sorted(p.concept_ids)),
                        "|".join(sorted(p.countries)),
                        "|".join(sorted(p.author_ids)),
                        "|".join(sorted(p.affiliation_ids)),
                        p.title,
                        p.abstract,
                    ]
                ).encode("utf-8")
            )
            h.update(b"\x1e")
        for link in sorted(self.citations, key=lambda l: (l.citing_pub_id, l.cited_pub_id)):
            h.update(f"{link.citing_pub_id}\x1f{link.cited_pub_id}\x1e".encode("utf-8"))
        return h.hexdigest()

    def _windowed_tables(self, window):
        """Per-year citation tallies: by (cited pub, citing country) and by
        cited pub (all countries pooled)."""
        if window in self._window_cache:
            return self._window_cache[window]
        per_country = {}
        total = {}
        pubs = self.publications
        for link in self.citations:
            cited = pubs[link.cited_pub_id]
            citing = pubs[link.citing_pub_id]
            if not (cited.year <= citing.year <= cited.year + window):
                continue
            year_pc = per_country.setdefault(cited.year, {})
            year_tot = total.setdefault(cited.year, {})
            year_tot[cited.pub_id] = year_tot.get(cited.pub_id, 0) + 1
            for country in citing.countries:
                key = (cited.pub_id, country)
                year_pc[key] = year_pc.get(key, 0) + 1
        self._window_cache[window] = (per_country, total)
        return per_country, total


def attribute_countries(publication):
    """Full counting: every byline country receives one whole unit."""
    return set(publication.countries)


def _read_rows(path, required, optional=()):
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    with open(path, encoding="utf-8", newline="") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path}: empty file (missing header)")
    header = lines[0].split("\t")
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: header missing required columns {missing}")
    unknown = [c for c in header if c not in required and c not in optional]
    if unknown:
        raise DataError(f"{path}: unknown columns {unknown}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DataError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(fields)}"
            )
        rows.append((lineno, dict(zip(header, fields))))
    return rows


def _split_multi(cell):
    return frozenset(v for v in cell.split("|") if v)


def _parse_int(cell, path, lineno, name):
    try:
        return int(cell)
    except ValueError:
        raise DataError(f"{path}:{lineno}: column {name!r}: not an integer: {cell!r}")


def _parse_optional_float(cell, path, lineno, name):
    if cell == "":
        return None
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}:{lineno}: column {name!r}: not a number: {cell!r}")
    if value != value or value in (float("inf"), float("-inf")):
        raise DataError(f"{path}:{lineno}: column {name!r}: non-finite value")
    return value


def _parse_optional_flag(cell, path, lineno, name):
    if cell == "":
        return None
    if cell not in ("0", "1"):
        raise DataError(f"{path}:{lineno}: column {name!r}: expected 0 or 1, got {cell!r}")
    return int(cell)


def load_corpus(publications_path, citations_path):
    """Load and cross-validate the bibliographic corpus.

    Publications without a country affiliation are dropped (reported).
    Citation rows whose endpoints never appear in the publication file are
    a hard error; rows pointing at dropped publications are themselves
    dropped and counted.
    """
    report = LoadReport()
    publications = {}
    seen_ids = set()
    for lineno, row in _read_rows(
        publications_path, PUBLICATION_COLUMNS, PUBLICATION_TEXT_COLUMNS
    ):
        pub_id = row["pub_id"]
        if not pub_id:
            raise DataError(f"{publications_path}:{lineno}: empty pub_id")
        if pub_id in seen_ids:
            raise DataError(f"{publications_path}:{lineno}: duplicate pub_id {pub_id!r}")
        seen_ids.add(pub_id)
        year = _parse_int(row["year"], publications_path, lineno, "year")
        if year < 1900:
            raise DataError(f"{publications_path}:{lineno}: year {year} before 1900")
        countries = _split_multi(row["countries"])
        for c in countries:
            if not _COUNTRY_RE.match(c):
                raise DataError(
                    f"{publications_path}:{lineno}: invalid country code {c!r}"
                )
        if not countries:
            report.dropped_no_country += 1
            continue
        publications[pub_id] = PublicationRecord(
            pub_id=pub_id,
            year=year,
            venue_id=row["venue_id"],
            field_id=row["field_id"],
            concept_ids=_split_multi(row["concept_ids"]),
            countries=countries,
            author_ids=_split_multi(row["author_ids"]),
            affiliation_ids=_split_multi(row["affiliation_ids"]),
            title=row.get("title", ""),
            abstract=row.get("abstract", ""),
        )

    citations = []
    for lineno, row in _read_rows(citations_path, CITATION_COLUMNS):
        citing, cited = row["citing_pub_id"], row["cited_pub_id"]
        if citing == cited:
            raise DataError(
                f"{citations_path}:{lineno}: publication-level self-citation {citing!r}"
            )
        for key in (citing, cited):
            if key not in seen_ids:
                raise DataError(
                    f"{citations_path}:{lineno}: unresolved pub_id {key!r}"
                )
        if citing not in publications or cited not in publications:
            # Endpoint existed in the file but was dropped (no affiliation).
            report.dropped_unresolved_citations += 1
            continue
        citations.append(CitationLink(citing, cited))

    report.n_publications = len(publications)
    report.n_citations = len(citations)
    return Corpus(publications, citations, report)


def filter_self_links(corpus):
    """Drop citation links whose endpoints share an author or affiliation.

    Idempotent; returns a new corpus with the removal count added to the
    load report.
    """
    kept = []
    removed = 0
    pubs = corpus.publications
    for link in corpus.citations:
        a = pubs[link.citing_pub_id]
        b = pubs[link.cited_pub_id]
        if a.author_ids & b.author_ids or a.affiliation_ids & b.affiliation_ids:
            removed += 1
        else:
            kept.append(link)
    report = replace(
        corpus.report,
        n_citations=len(kept),
        removed_self_links=corpus.report.removed_self_links + removed,
    )
    return Corpus(pubs, kept, report)


def compute_windowed_counts(corpus, year, window=5):
    """Country-specific citation totals for publications from ``year``.

    Only (publication, country) pairs with at least one citation inside
    the window appear; a year outside the corpus range yields an empty
    list.
    """
    per_country, _ = corpus._windowed_tables(window)
    table = per_country.get(year, {})
    out = [
        WindowedCount(pub_id, country, year, c)
        for (pub_id, country), c in table.items()
    ]
    out.sort(key=lambda w: (w.citing_country, w.cited_pub_id))
    return out


def total_windowed_counts(corpus, year, window=5):
    """Citations from anywhere to each publication of ``year`` within the
    window; publications with zero citations are included with 0."""
    _, total = corpus._windowed_tables(window)
    table = total.get(year, {})
    out = {}
    for pub in corpus.publications.values():
        if pub.year == year:
            out[pub.pub_id] = table.get(pub.pub_id, 0)
    return out


def load_country_year_covariates(path):
    """country-year covariate table keyed by (country, year)."""
    out = {}
    for lineno, row in _read_rows(path, COVARIATE_CY_COLUMNS):
        country = row["country"]
        if not _COUNTRY_RE.match(country):
            raise DataError(f"{path}:{lineno}: invalid country code {country!r}")
        year = _parse_int(row["year"], path, lineno, "year")
        key = (country, year)
        if key in out:
            raise DataError(f"{path}:{lineno}: duplicate covariate row for {key}")
        out[key] = CountryYearCovariates(
            country=country,
            year=year,
            gdp_pc=_parse_optional_float(row["gdp_pc"], path, lineno, "gdp_pc"),
            gni=_parse_optional_float(row["gni"], path, lineno, "gni"),
            population=_parse_optional_float(row["population"], path, lineno, "population"),
            rd_gdp_pct=_parse_optional_float(row["rd_gdp_pct"], path, lineno, "rd_gdp_pct"),
            democracy=_parse_optional_float(row["democracy"], path, lineno, "democracy"),
            patents_resident=_parse_optional_float(
                row["patents_resident"], path, lineno, "patents_resident"
            ),
            patents_total=_parse_optional_float(
                row["patents_total"], path, lineno, "patents_total"
            ),
        )
    return out


def load_dyad_covariates(path):
    """Dyadic covariate table keyed by (origin, destination)."""
    out = {}
    for lineno, row in _read_rows(path, COVARIATE_DYAD_COLUMNS):
        origin, destination = row["origin"], row["destination"]
        for c in (origin, destination):
            if not _COUNTRY_RE.match(c):
                raise DataError(f"{path}:{lineno}: invalid country code {c!r}")
        key = (origin, destination)
        if key in out:
            raise DataError(f"{path}:{lineno}: duplicate dyad row for {key}")
        out[key] = DyadCovariates(
            origin=origin,
            destination=destination,
            distance_km=_parse_optional_float(row["distance_km"], path, lineno, "distance_km"),
            same_continent=_parse_optional_flag(
                row["same_continent"], path, lineno, "same_continent"
            ),
            same_language=_parse_optional_flag(
                row["same_language"], path, lineno, "same_language"
            ),
            trade_volume=_parse_optional_float(
                row["trade_volume"], path, lineno, "trade_volume"
            ),
            sta_flag=_parse_optional_flag(row["sta_flag"], path, lineno, "sta_flag"),
        )
    return out


def load_ideas_master(path):
    """One idea phrase per line; blank lines ignored."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    ideas = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            phrase = line.strip()
            if phrase:
                ideas.append(phrase)
    if not ideas:
        raise DataError(f"{path}: idea master list is empty")
    return ideas

"""Shared fixtures: tiny TSV corpora written to tmp_path."""

import pytest

from citepref import corpus as corpus_mod

PUB_HEADER = "\t".join(corpus_mod.PUBLICATION_COLUMNS)
PUB_HEADER_TEXT = "\t".join(
    corpus_mod.PUBLICATION_COLUMNS + corpus_mod.PUBLICATION_TEXT_COLUMNS
)
CIT_HEADER = "\t".join(corpus_mod.CITATION_COLUMNS)


def format_pub(pub_id, year, countries, venue="v1", field="f1", concepts=(),
               authors=(), affils=(), title=None, abstract=None):
    cells = [
        pub_id,
        str(year),
        venue,
        field,
        "|".join(concepts),
        "|".join(countries),
        "|".join(authors),
        "|".join(affils),
    ]
    if title is not None or abstract is not None:
        cells += [title or "", abstract or ""]
    return "\t".join(cells)


@pytest.fixture
def corpus_files(tmp_path):
    """Writer for (publications.tsv, citations.tsv) pairs."""

    def build(pub_lines, cit_pairs, with_text=False):
        header = PUB_HEADER_TEXT if with_text else PUB_HEADER
        pub_path = tmp_path / "publications.tsv"
        pub_path.write_text("\n".join([header] + list(pub_lines)) + "\n")
        cit_path = tmp_path / "citations.tsv"
        rows = [CIT_HEADER] + [f"{a}\t{b}" for a, b in cit_pairs]
        cit_path.write_text("\n".join(rows) + "\n")
        return pub_path, cit_path

    return build

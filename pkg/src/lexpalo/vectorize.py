"""Vocabulary construction and row-normalized TF-IDF document-term matrices.

The weighting, for word w in document d against a training corpus D:

    tf(w, d)     = count(w, d) / len(d)          (mean frequency in d)
    idf(w)       = 1 + ln(|D| / df(w))           (natural log)
    tfidf(w, d)  = tf(w, d) * idf(w)

and every document row is then L2-normalized to unit length. |D| and df come
from the vocabulary's training corpus, never from the documents being
vectorized; tokens outside the vocabulary are dropped (their only trace is in
the tf denominator, which cancels under normalization).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .corpus_io import Corpus
from .errors import VocabularyMismatchError


@dataclass(frozen=True)
class Vocabulary:
    """Sorted word list of a training corpus with document frequencies."""

    words: tuple[str, ...]
    index: dict[str, int]
    df: tuple[int, ...]
    n_docs: int


@dataclass(frozen=True)
class TfIdfMatrix:
    """Sparse row-normalized TF-IDF matrix over a fixed vocabulary.

    Rows align with ``doc_ids``; documents that produced an all-zero row
    (no in-vocabulary tokens) are listed in ``empty_doc_ids``.
    """

    matrix: sp.csr_matrix
    doc_ids: tuple[str, ...]
    vocab: Vocabulary
    empty_doc_ids: tuple[str, ...]


def build_vocabulary(train: Corpus) -> Vocabulary:
    """Collect the training corpus vocabulary, sorted lexicographically,
    with per-word document frequencies and the training document count."""
    df_counts: Counter[str] = Counter()
    for rec in train.records:
        df_counts.update(set(rec.text.split()))
    words = tuple(sorted(df_counts))
    return Vocabulary(
        words=words,
        index={w: i for i, w in enumerate(words)},
        df=tuple(df_counts[w] for w in words),
        n_docs=len(train.records),
    )


def _idf(vocab: Vocabulary) -> np.ndarray:
    return 1.0 + np.log(vocab.n_docs / np.asarray(vocab.df, dtype=float))


def tfidf_row(tokens: list[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Vectorize one token list as a 1 x |V| L2-normalized sparse row.

    A document without in-vocabulary tokens yields an all-zero row.
    """
    if not vocab.words:
        raise VocabularyMismatchError("vocabulary is empty")
    return _rows_from_token_lists([tokens], vocab)[0]


def _rows_from_token_lists(token_lists, vocab: Vocabulary):
    idf = _idf(vocab)
    rows = []
    for tokens in token_lists:
        counts = Counter(t for t in tokens if t in vocab.index)
        if not counts:
            rows.append(sp.csr_matrix((1, len(vocab.words))))
            continue
        length = len(tokens)
        cols = np.array([vocab.index[w] for w in counts], dtype=np.int64)
        vals = np.array(
            [counts[w] / length for w in counts], dtype=float
        ) * idf[cols]
        vals /= np.linalg.norm(vals)
        rows.append(
            sp.csr_matrix(
                (vals, (np.zeros_like(cols), cols)), shape=(1, len(vocab.words))
            )
        )
    return rows


def tfidf(docs: Corpus, vocab: Vocabulary) -> TfIdfMatrix:
    """Vectorize every record of a corpus against ``vocab``.

    Row order follows the corpus; each non-empty row has unit L2 norm.
    """
    if not vocab.words:
        raise VocabularyMismatchError("vocabulary is empty")
    token_lists = [rec.text.split() for rec in docs.records]
    rows = _rows_from_token_lists(token_lists, vocab)
    matrix = sp.vstack(rows, format="csr") if rows else sp.csr_matrix(
        (0, len(vocab.words))
    )
    empty = tuple(
        rec.id for rec, row in zip(docs.records, rows) if row.nnz == 0
    )
    return TfIdfMatrix(
        matrix=matrix,
        doc_ids=tuple(rec.id for rec in docs.records),
        vocab=vocab,
        empty_doc_ids=empty,
    )

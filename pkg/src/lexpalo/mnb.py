"""Multinomial naive Bayes over TF-IDF features with additive smoothing.

Training accumulates, per class C, the TF-IDF mass of every vocabulary word
across the class's documents and smooths it with alpha > 0:

    P(w|C) = (alpha + sum_{d in C} tfidf(w, d))
             / sum_{w' in V} (alpha + sum_{d in C} tfidf(w', d))

Priors are class frequencies among the training documents. Scoring is done
in log space:

    score(C|d) = ln P(C) + sum_{w in d} ln P(w|C) * tfidf(w, d)

with out-of-vocabulary words dropped; the predicted class is the argmax,
ties resolved in favor of the first class in sorted order. A document with
an all-zero vector is scored by priors alone.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    AlphaNonPositiveError,
    CorpusIoError,
    LabelMismatchError,
    ModelFormatError,
    UnknownClassError,
    VocabularyMismatchError,
)
from .vectorize import TfIdfMatrix, Vocabulary

MODEL_FORMAT_VERSION = "mnb-v1"


@dataclass(frozen=True)
class MnbModel:
    """A fitted classifier: class order, priors, per-class word log-probs
    (shape n_classes x |V|, rows aligned with ``classes``), the smoothing
    value, and the training vocabulary."""

    classes: tuple[str, ...]
    priors: dict[str, float]
    word_logprob: np.ndarray
    alpha: float
    vocab: Vocabulary


@dataclass(frozen=True)
class ClassScores:
    """Log-space class scores for one document and the argmax class."""

    scores: dict[str, float]
    predicted: str


def class_masses(
    matrix: TfIdfMatrix, labels
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Sum TF-IDF rows per class.

    Returns (sorted classes, mass matrix of shape n_classes x |V|, per-class
    document counts). Raises LabelMismatchError when labels do not align with
    the matrix rows.
    """
    labels = list(labels)
    if len(labels) != matrix.matrix.shape[0]:
        raise LabelMismatchError(
            f"{len(labels)} labels for {matrix.matrix.shape[0]} matrix rows"
        )
    classes = tuple(sorted(set(labels)))
    label_arr = np.asarray(labels, dtype=object)
    mass = np.zeros((len(classes), matrix.matrix.shape[1]))
    counts = np.zeros(len(classes))
    for k, cls in enumerate(classes):
        row_ix = np.flatnonzero(label_arr == cls)
        counts[k] = len(row_ix)
        mass[k] = np.asarray(matrix.matrix[row_ix].sum(axis=0)).ravel()
    return classes, mass, counts


def fit_from_masses(
    vocab: Vocabulary,
    classes: tuple[str, ...],
    mass: np.ndarray,
    counts: np.ndarray,
    alpha: float,
) -> MnbModel:
    """Build a model from precomputed class masses (see :func:`class_masses`).

    Split out from :func:`fit` so smoothing sweeps can re-smooth the same
    masses without re-aggregating the matrix.
    """
    if alpha <= 0:
        raise AlphaNonPositiveError(f"alpha must be > 0, got {alpha}")
    smoothed = alpha + mass
    log_denoms = np.log(smoothed.sum(axis=1))
    word_logprob = np.log(smoothed) - log_denoms[:, None]
    total = counts.sum()
    priors = {cls: float(counts[k] / total) for k, cls in enumerate(classes)}
    return MnbModel(
        classes=classes,
        priors=priors,
        word_logprob=word_logprob,
        alpha=alpha,
        vocab=vocab,
    )


def fit(matrix: TfIdfMatrix, labels, alpha: float) -> MnbModel:
    """Fit the classifier on a TF-IDF matrix and aligned labels."""
    if alpha <= 0:
        raise AlphaNonPositiveError(f"alpha must be > 0, got {alpha}")
    classes, mass, counts = class_masses(matrix, labels)
    return fit_from_masses(matrix.vocab, classes, mass, counts, alpha)


def _score_matrix(model: MnbModel, rows) -> np.ndarray:
    """Score many documents at once: rows (n x |V|) -> scores (n x n_classes)."""
    if rows.shape[1] != len(model.vocab.words):
        raise VocabularyMismatchError(
            f"document vector has {rows.shape[1]} columns, model vocabulary "
            f"has {len(model.vocab.words)}"
        )
    log_priors = np.array([math.log(model.priors[c]) for c in model.classes])
    contrib = rows.dot(model.word_logprob.T)
    if sp.issparse(contrib):
        contrib = contrib.toarray()
    return np.asarray(contrib) + log_priors


def score(model: MnbModel, doc_vector) -> ClassScores:
    """Score one document vector (1 x |V| sparse row or dense vector).

    An all-zero vector degrades to prior-only scores. Ties go to the first
    class in the model's sorted class order.
    """
    if not sp.issparse(doc_vector):
        doc_vector = np.asarray(doc_vector, dtype=float).reshape(1, -1)
    scores = _score_matrix(model, doc_vector)[0]
    predicted = model.classes[int(np.argmax(scores))]
    return ClassScores(
        scores={c: float(s) for c, s in zip(model.classes, scores)},
        predicted=predicted,
    )


def predict_rows(model: MnbModel, rows) -> list[str]:
    """Predict a label per row of a (sparse) document matrix."""
    scores = _score_matrix(model, rows)
    return [model.classes[k] for k in np.argmax(scores, axis=1)]


def word_logprob_table(model: MnbModel, palo: str) -> list[tuple[str, float]]:
    """All (word, ln P(word|palo)) pairs, most probable first; ties on the
    log-probability break lexicographically."""
    if palo not in model.classes:
        raise UnknownClassError(
            f"{palo!r} is not one of the fitted classes {list(model.classes)}"
        )
    k = model.classes.index(palo)
    logs = model.word_logprob[k]
    order = sorted(range(len(logs)), key=lambda j: (-logs[j], model.vocab.words[j]))
    return [(model.vocab.words[j], float(logs[j])) for j in order]


def save_model(model: MnbModel, path, preprocess_state: dict | None = None) -> None:
    """Persist a model as JSON (format version "mnb-v1").

    ``preprocess_state`` — the frozen text-filtering state captured at
    training time — is stored alongside the model so saved classifiers can
    normalize new text exactly as their training corpus was.
    """
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "classes": list(model.classes),
        "priors": {c: model.priors[c] for c in model.classes},
        "alpha": model.alpha,
        "vocab": {
            "words": list(model.vocab.words),
            "df": list(model.vocab.df),
            "n_docs": model.vocab.n_docs,
        },
        "word_logprob": [list(map(float, row)) for row in model.word_logprob],
    }
    if preprocess_state is not None:
        payload["preprocess"] = preprocess_state
    path = os.fspath(path)
    try:
        fd, tmp_name = tempfile.mkstemp(
            dir=os.path.dirname(path) or ".", prefix=".model.", suffix=".tmp"
        )
    except OSError as exc:
        raise CorpusIoError(f"cannot write model file {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)
            fh.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def load_model(path) -> tuple[MnbModel, dict | None]:
    """Load a model persisted by :func:`save_model`.

    Returns the model and the stored preprocessing state (None when absent).
    Raises CorpusIoError for unreadable files and ModelFormatError for
    unknown versions or malformed content.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ModelFormatError(
                    f"model file {path} is not valid JSON"
                ) from exc
    except OSError as exc:
        raise CorpusIoError(f"cannot read model file {path}: {exc}") from exc
    version = payload.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model version {version!r} "
            f"(expected {MODEL_FORMAT_VERSION!r})"
        )
    try:
        words = tuple(payload["vocab"]["words"])
        vocab = Vocabulary(
            words=words,
            index={w: i for i, w in enumerate(words)},
            df=tuple(payload["vocab"]["df"]),
            n_docs=payload["vocab"]["n_docs"],
        )
        model = MnbModel(
            classes=tuple(payload["classes"]),
            priors=dict(payload["priors"]),
            word_logprob=np.asarray(payload["word_logprob"], dtype=float),
            alpha=payload["alpha"],
            vocab=vocab,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file {path} is malformed: {exc}") from exc
    if model.word_logprob.shape != (len(model.classes), len(words)):
        raise ModelFormatError(
            f"model file {path} has log-prob shape "
            f"{model.word_logprob.shape}, expected "
            f"({len(model.classes)}, {len(words)})"
        )
    return model, payload.get("preprocess")

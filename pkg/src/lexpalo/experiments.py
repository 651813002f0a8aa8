"""Repeated-training experiments over a preprocessed corpus.

Every experiment derives its per-run seeds from one master seed through
``derive_seed(master, "run", i)``, so a (corpus, parameters, master seed)
triple fully determines all reports, independent of parallelism. Runs may be
executed in worker processes; results are always merged in run order.

A single run: stratified 85/15-style split -> vocabulary and TF-IDF from the
training side only -> naive-Bayes fit (documents that lost all tokens in
preprocessing are excluded from the training side) -> every validation
document scored, including empty ones (scored by priors alone).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import mnb
from .corpus_io import Corpus, SplitSpec, stratified_split
from .errors import InconsistentClassesError, NoThresholdError
from .seeding import derive_seed
from .vectorize import build_vocabulary, tfidf

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class TrainingResult:
    """One train/validation round: the split seed, confusion matrix over
    ``classes`` (rows true, columns predicted, raw counts), accuracies, and
    the fitted model."""

    seed: int
    classes: tuple[str, ...]
    confusion: np.ndarray
    per_class_accuracy: dict[str, float]
    global_accuracy: float
    model: mnb.MnbModel


@dataclass(frozen=True)
class AggregateReport:
    """Accuracy distribution and confusion structure over many runs.

    mean_confusion is the mean of per-run row-normalized confusion matrices
    (so its diagonal equals mean_accuracy); confusion_only zeroes the
    diagonal and renormalizes each row over the off-diagonal mass, leaving
    all-zero rows (palos never confused) listed in zero_confusion_palos.
    """

    n_runs: int
    classes: tuple[str, ...]
    mean_accuracy: dict[str, float]
    accuracy_samples: dict[str, tuple[float, ...]]
    mean_global_accuracy: float
    mean_confusion: np.ndarray
    confusion_only: np.ndarray
    zero_confusion_palos: tuple[str, ...]


@dataclass(frozen=True)
class AlphaSweepResult:
    """Mean validation accuracy per smoothing value over a fixed set of
    seeded splits; best_alpha is the grid argmax (ties: smallest alpha)."""

    grid: tuple[float, ...]
    mean_accuracy: tuple[float, ...]
    best_alpha: float
    n_runs: int


@dataclass(frozen=True)
class EssentialWordReport:
    """Per-palo essential vocabularies.

    per_palo lists each palo's essential words by descending mean P(w|palo)
    across runs; counts/normalized give list sizes and sizes divided by the
    palo's type count; threshold_rank is the 0-based rank of the best
    ever-at-floor word (essential words are exactly those ranked above it).
    """

    per_palo: dict[str, tuple[str, ...]]
    counts: dict[str, int]
    normalized: dict[str, float]
    threshold_rank: dict[str, int]
    n_runs: int


def _drop_empty(corpus: Corpus) -> Corpus:
    """Training-side filter: drop records whose text has no tokens."""
    kept = [r for r in corpus.records if r.text.split()]
    if len(kept) == len(corpus.records):
        return corpus
    return Corpus(kept)


def run_training(corpus: Corpus, alpha: float, split: SplitSpec) -> TrainingResult:
    """Run one seeded split + fit + validation round."""
    train, validation = stratified_split(corpus, split)
    train = _drop_empty(train)
    vocab = build_vocabulary(train)
    train_matrix = tfidf(train, vocab)
    model = mnb.fit(train_matrix, [r.palo for r in train.records], alpha)

    classes = tuple(sorted(corpus.palo_index))
    class_pos = {c: k for k, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=int)
    val_matrix = tfidf(validation, vocab)
    predictions = mnb.predict_rows(model, val_matrix.matrix)
    for rec, predicted in zip(validation.records, predictions):
        confusion[class_pos[rec.palo], class_pos[predicted]] += 1

    row_totals = confusion.sum(axis=1)
    per_class = {
        c: float(confusion[k, k] / row_totals[k]) for k, c in enumerate(classes)
    }
    global_accuracy = float(confusion.trace() / confusion.sum())
    return TrainingResult(
        seed=split.seed,
        classes=classes,
        confusion=confusion,
        per_class_accuracy=per_class,
        global_accuracy=global_accuracy,
        model=model,
    )


def _run_seeds(master_seed: int, n_runs: int) -> list[int]:
    return [derive_seed(master_seed, "run", i) for i in range(n_runs)]


def _run_training_task(args) -> TrainingResult:
    corpus, alpha, spec = args
    return run_training(corpus, alpha, spec)


def run_trainings(
    corpus: Corpus,
    alpha: float,
    n_runs: int,
    split: SplitSpec,
    threads: int = 1,
) -> list[TrainingResult]:
    """Run ``n_runs`` independent rounds with per-run derived seeds.

    With threads > 1 the rounds execute in worker processes; results are
    identical to the sequential order either way.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    specs = [
        SplitSpec(train_fraction=split.train_fraction, seed=s)
        for s in _run_seeds(split.seed, n_runs)
    ]
    tasks = [(corpus, alpha, spec) for spec in specs]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_training_task, tasks))
    return [_run_training_task(t) for t in tasks]


def aggregate(runs: Sequence[TrainingResult]) -> AggregateReport:
    """Combine per-run results into accuracy and confusion reports."""
    if not runs:
        raise ValueError("no runs to aggregate")
    classes = runs[0].classes
    for r in runs[1:]:
        if r.classes != classes:
            raise InconsistentClassesError(
                f"runs disagree on classes: {r.classes} vs {classes}"
            )
    samples = {
        c: tuple(r.per_class_accuracy[c] for r in runs) for c in classes
    }
    mean_accuracy = {c: float(np.mean(samples[c])) for c in classes}
    normalized_rows = [
        r.confusion / r.confusion.sum(axis=1, keepdims=True) for r in runs
    ]
    mean_confusion = np.mean(normalized_rows, axis=0)

    off_diag = mean_confusion.copy()
    np.fill_diagonal(off_diag, 0.0)
    confusion_only = np.zeros_like(off_diag)
    zero_palos = []
    for k, c in enumerate(classes):
        mass = off_diag[k].sum()
        if mass > 0.0:
            confusion_only[k] = off_diag[k] / mass
        else:
            zero_palos.append(c)
    return AggregateReport(
        n_runs=len(runs),
        classes=classes,
        mean_accuracy=mean_accuracy,
        accuracy_samples=samples,
        mean_global_accuracy=float(np.mean([r.global_accuracy for r in runs])),
        mean_confusion=mean_confusion,
        confusion_only=confusion_only,
        zero_confusion_palos=tuple(zero_palos),
    )


def alpha_grid(grid_step: float) -> tuple[float, ...]:
    """The sweep grid {grid_step, 2*grid_step, ..., <= 1}."""
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"grid_step must lie in (0, 1], got {grid_step}")
    n_steps = int(1.0 / grid_step + 1e-9)
    return tuple(round(i * grid_step, 12) for i in range(1, n_steps + 1))


def _sweep_one_task(args) -> np.ndarray:
    corpus, grid, spec = args
    train, validation = stratified_split(corpus, spec)
    train = _drop_empty(train)
    vocab = build_vocabulary(train)
    train_matrix = tfidf(train, vocab)
    classes, mass, counts = mnb.class_masses(
        train_matrix, [r.palo for r in train.records]
    )
    val_matrix = tfidf(validation, vocab)
    truth = [r.palo for r in validation.records]
    accuracies = np.empty(len(grid))
    for g, alpha in enumerate(grid):
        model = mnb.fit_from_masses(vocab, classes, mass, counts, alpha)
        predictions = mnb.predict_rows(model, val_matrix.matrix)
        accuracies[g] = float(np.mean([p == t for p, t in zip(predictions, truth)]))
    return accuracies


def alpha_sweep(
    corpus: Corpus,
    grid_step: float,
    n_runs: int,
    split: SplitSpec,
    threads: int = 1,
) -> AlphaSweepResult:
    """Mean validation accuracy across the alpha grid.

    The same n_runs seeded splits evaluate every grid point (vocabulary,
    TF-IDF and class masses are computed once per split and re-smoothed per
    alpha), so curves across alphas are comparable run by run.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    grid = alpha_grid(grid_step)
    specs = [
        SplitSpec(train_fraction=split.train_fraction, seed=s)
        for s in _run_seeds(split.seed, n_runs)
    ]
    tasks = [(corpus, grid, spec) for spec in specs]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_run = list(pool.map(_sweep_one_task, tasks))
    else:
        per_run = [_sweep_one_task(t) for t in tasks]
    mean_accuracy = np.mean(per_run, axis=0)
    best_alpha = grid[int(np.argmax(mean_accuracy))]
    return AlphaSweepResult(
        grid=grid,
        mean_accuracy=tuple(float(a) for a in mean_accuracy),
        best_alpha=best_alpha,
        n_runs=n_runs,
    )


def essential_words(
    corpus: Corpus,
    alpha: float,
    n_runs: int,
    split: SplitSpec,
    epsilon: float = DEFAULT_EPSILON,
) -> EssentialWordReport:
    """Extract per-palo essential vocabularies over repeated trainings.

    Per run and palo, every vocabulary word whose P(w|palo) lies within
    relative ``epsilon`` of the run's minimum is flagged (at the smoothing
    floor: the palo never uses it). Words are then ranked by mean P(w|palo)
    across runs — a word absent from a run's vocabulary contributes that
    run's floor alpha/denominator — and the essential words are those ranked
    strictly above the best-ranked flagged word. Mean ties rank
    lexicographically.
    """
    if n_runs < 2:
        raise ValueError(f"n_runs must be >= 2, got {n_runs}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    classes = tuple(sorted(corpus.palo_index))
    class_pos = {c: k for k, c in enumerate(classes)}

    union_index: dict[str, int] = {}
    capacity = 0
    deltas = np.zeros((len(classes), 0))  # sum of (P - run floor), present runs
    total_floor = np.zeros(len(classes))  # sum of run floors, all runs
    flagged: list[set[int]] = [set() for _ in classes]

    for spec_seed in _run_seeds(split.seed, n_runs):
        spec = SplitSpec(train_fraction=split.train_fraction, seed=spec_seed)
        train, _ = stratified_split(corpus, spec)
        train = _drop_empty(train)
        vocab = build_vocabulary(train)
        matrix = tfidf(train, vocab)
        run_classes, run_mass, _ = mnb.class_masses(
            matrix, [r.palo for r in train.records]
        )
        n_words = len(vocab.words)
        mass = np.zeros((len(classes), n_words))
        for k_run, cls in enumerate(run_classes):
            mass[class_pos[cls]] = run_mass[k_run]

        # map this run's vocabulary into the growing union vocabulary
        positions = np.empty(n_words, dtype=np.int64)
        for j, word in enumerate(vocab.words):
            positions[j] = union_index.setdefault(word, len(union_index))
        if len(union_index) > capacity:
            grown = np.zeros((len(classes), len(union_index)))
            grown[:, :capacity] = deltas
            deltas = grown
            capacity = len(union_index)

        denom = alpha * n_words + mass.sum(axis=1)
        floor = alpha / denom
        probs = (alpha + mass) / denom[:, None]
        total_floor += floor
        deltas[:, positions] += probs - floor[:, None]
        for k in range(len(classes)):
            at_floor = probs[k] <= probs[k].min() * (1.0 + epsilon)
            flagged[k].update(positions[at_floor].tolist())

    words = sorted(union_index, key=union_index.get)
    means = (deltas + total_floor[:, None]) / n_runs

    palo_types: dict[str, set[str]] = {p: set() for p in classes}
    for rec in corpus.records:
        palo_types[rec.palo].update(rec.text.split())

    per_palo: dict[str, tuple[str, ...]] = {}
    counts: dict[str, int] = {}
    normalized: dict[str, float] = {}
    thresholds: dict[str, int] = {}
    for k, cls in enumerate(classes):
        if not flagged[k]:
            raise NoThresholdError(
                f"no word was ever flagged at the floor for palo {cls!r}"
            )
        order = sorted(range(len(words)), key=lambda u: (-means[k, u], words[u]))
        rank_of = {u: rank for rank, u in enumerate(order)}
        threshold = min(rank_of[u] for u in flagged[k])
        essential = tuple(words[order[r]] for r in range(threshold))
        per_palo[cls] = essential
        counts[cls] = threshold
        n_types = len(palo_types[cls])
        normalized[cls] = threshold / n_types if n_types else 0.0
        thresholds[cls] = threshold
    return EssentialWordReport(
        per_palo=per_palo,
        counts=counts,
        normalized=normalized,
        threshold_rank=thresholds,
        n_runs=n_runs,
    )

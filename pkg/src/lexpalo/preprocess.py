"""Text-filtering pipeline for lyric corpora.

Stages, applied in this order over a whole corpus:

1. multiword-phrase concatenation ("Santa Ana" -> "SantaAna"), so proper
   names survive tokenization as single tokens;
2. corpus-level case normalization: a word observed capitalized is lowered
   everywhere iff its capitalized occurrences are rare relative to gamma
   (N_w < gamma * (n_w + N_w)); frequent capitalization marks proper nouns,
   which keep their case;
3. accent and punctuation stripping (combining marks removed, the tilde of
   n-with-tilde preserved, u-with-diaeresis mapped to plain u);
4. whitespace tokenization;
5. case-sensitive stop-word removal.

Records whose text filters down to nothing are retained with empty text and
counted in a warning, so corpus alignment never silently changes.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources as importlib_resources

from .corpus_io import Corpus
from .errors import CorpusIoError, FormatError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.2
# Includes the literal backslash; everything else is common Spanish lyric
# punctuation (inverted marks included).
DEFAULT_PUNCTUATION = frozenset(",;.:¡!¿?@#\\$")
_COMBINING_TILDE = "̃"


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs of the filtering pipeline.

    concat_map entries are (multiword phrase, joined replacement) pairs;
    stopwords are matched case-sensitively against fully normalized tokens.
    """

    gamma: float = DEFAULT_GAMMA
    concat_map: tuple[tuple[str, str], ...] = ()
    stopwords: frozenset[str] = frozenset()
    punctuation: frozenset[str] = DEFAULT_PUNCTUATION

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        for phrase, joined in self.concat_map:
            if len(phrase.split()) < 2:
                raise ValueError(
                    f"concat-map phrase {phrase!r} is not multiword"
                )
            if not joined or joined.split() != [joined]:
                raise ValueError(
                    f"concat-map replacement {joined!r} must be a single token"
                )
        for word in self.stopwords:
            if not word or word.split() != [word]:
                raise ValueError(f"stop word {word!r} contains whitespace")


@dataclass(frozen=True)
class CaseDecision:
    """Corpus-level lowercasing decision for one word form.

    ``word`` is the lowercased (accent-preserving) form; ``n_lower``/
    ``n_upper`` count occurrences starting with a lowercase/uppercase letter;
    ``lowered`` records whether all occurrences get lowercased.
    """

    word: str
    n_lower: int
    n_upper: int
    lowered: bool


def load_stopwords(path) -> frozenset[str]:
    """Read a stop-word file: one token per line, '#' comments, blanks ignored."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CorpusIoError(f"cannot read stop-word file {path}: {exc}") from exc
    words = []
    for ln, raw in enumerate(lines, start=1):
        entry = raw.strip()
        if not entry or entry.startswith("#"):
            continue
        if len(entry.split()) != 1:
            raise FormatError(f"stop-word entry {entry!r} contains whitespace", ln)
        words.append(entry)
    return frozenset(words)


def load_concat_map(path) -> tuple[tuple[str, str], ...]:
    """Read a concat-map file: tab-separated ``phrase<TAB>replacement`` lines."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CorpusIoError(f"cannot read concat-map file {path}: {exc}") from exc
    pairs = []
    for ln, raw in enumerate(lines, start=1):
        entry = raw.rstrip("\n")
        if not entry.strip() or entry.startswith("#"):
            continue
        parts = entry.split("\t")
        if len(parts) != 2:
            raise FormatError(
                "concat-map line must be 'phrase<TAB>replacement'", ln
            )
        pairs.append((parts[0], parts[1]))
    return tuple(pairs)


def default_config(gamma: float = DEFAULT_GAMMA) -> PreprocessConfig:
    """The packaged defaults: Spanish stop words and proper-name concat map."""
    res = importlib_resources.files("lexpalo")
    with importlib_resources.as_file(res / "resources" / "stopwords_es.txt") as p:
        stopwords = load_stopwords(p)
    with importlib_resources.as_file(res / "resources" / "concat_map.tsv") as p:
        concat_map = load_concat_map(p)
    return PreprocessConfig(gamma=gamma, concat_map=concat_map, stopwords=stopwords)


@lru_cache(maxsize=16)
def _concat_pattern(pairs: tuple[tuple[str, str], ...]):
    # Longest phrase first so overlapping phrases resolve deterministically.
    ordered = sorted(pairs, key=lambda kv: (-len(kv[0]), kv[0]))
    pattern = re.compile(
        r"\b(?:" + "|".join(re.escape(p) for p, _ in ordered) + r")\b",
        re.IGNORECASE,
    )
    replacements = {p.lower(): joined for p, joined in ordered}
    return pattern, replacements


def apply_concat_map(text: str, config: PreprocessConfig) -> str:
    """Replace configured multiword phrases (case-insensitive, word-bounded)
    with their single-token forms."""
    if not config.concat_map:
        return text
    pattern, replacements = _concat_pattern(config.concat_map)
    return pattern.sub(lambda m: replacements[m.group(0).lower()], text)


def concat_corpus(corpus: Corpus, config: PreprocessConfig) -> Corpus:
    """Apply the concat map to every record of a corpus."""
    return Corpus(
        replace(rec, text=apply_concat_map(rec.text, config))
        for rec in corpus.records
    )


@lru_cache(maxsize=16)
def _punct_table(punctuation: frozenset[str]):
    return {ord(c): None for c in punctuation}


def compute_case_decisions(
    corpus: Corpus, config: PreprocessConfig
) -> list[CaseDecision]:
    """Tally capitalization across the whole corpus and decide, per word form
    seen capitalized at least once, whether to lowercase it everywhere.

    Expects the concat map to have been applied already. Words are whitespace
    tokens with the configured punctuation removed; keys are accent-preserving
    lowercase forms. Decisions are returned sorted by word.
    """
    table = _punct_table(config.punctuation)
    lower: dict[str, int] = {}
    upper: dict[str, int] = {}
    for rec in corpus.records:
        for token in rec.text.split():
            word = token.translate(table)
            if not word:
                continue
            key = word.lower()
            if word[0].isupper():
                upper[key] = upper.get(key, 0) + 1
            else:
                lower[key] = lower.get(key, 0) + 1
    decisions = []
    for key in sorted(upper):
        n_upper = upper[key]
        n_lower = lower.get(key, 0)
        lowered = n_upper < config.gamma * (n_lower + n_upper)
        decisions.append(
            CaseDecision(word=key, n_lower=n_lower, n_upper=n_upper, lowered=lowered)
        )
    return decisions


def strip_accents_and_punct(text: str, config: PreprocessConfig) -> str:
    """Remove configured punctuation characters and accents.

    Accent removal drops combining marks after canonical decomposition,
    keeping the tilde that forms n-with-tilde (so "niña" survives intact
    while "corazón" -> "corazon" and "vergüenza" -> "verguenza").
    """
    text = text.translate(_punct_table(config.punctuation))
    kept: list[str] = []
    for ch in unicodedata.normalize("NFD", text):
        if unicodedata.combining(ch):
            if ch == _COMBINING_TILDE and kept and kept[-1] in "nN":
                kept.append(ch)
            continue
        kept.append(ch)
    return unicodedata.normalize("NFC", "".join(kept))


def tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace, dropping empty tokens."""
    return text.split()


def remove_stopwords(tokens: list[str], config: PreprocessConfig) -> list[str]:
    """Drop tokens that exactly match a stop word (case-sensitive)."""
    return [t for t in tokens if t not in config.stopwords]


def filter_tokens(
    text: str, config: PreprocessConfig, lowered_words: frozenset[str]
) -> list[str]:
    """Run stages 2-5 on one text, given the corpus-level lowered-word set.

    ``lowered_words`` holds the (pre-accent-strip) lowercase keys of words
    whose case decisions came out ``lowered=True``.
    """
    table = _punct_table(config.punctuation)
    out: list[str] = []
    for raw in text.split():
        word = raw.translate(table)
        if word and word.lower() in lowered_words:
            raw = raw.lower()
        stripped = strip_accents_and_punct(raw, config)
        for token in tokenize(stripped):
            if token not in config.stopwords:
                out.append(token)
    return out


def preprocess_with_decisions(
    corpus: Corpus, config: PreprocessConfig
) -> tuple[Corpus, list[CaseDecision]]:
    """Run the full five-stage pipeline, also returning the corpus-level case
    decisions (needed to freeze the pipeline state for later classification).

    The returned corpus has identical record ids/palos/metadata and filtered
    texts (tokens joined by single spaces). Records left without tokens are
    retained with empty text; their count is logged as a warning.
    """
    mapped = concat_corpus(corpus, config)
    decisions = compute_case_decisions(mapped, config)
    lowered = frozenset(d.word for d in decisions if d.lowered)
    out = []
    n_empty = 0
    for rec in mapped.records:
        tokens = filter_tokens(rec.text, config, lowered)
        if not tokens:
            n_empty += 1
        out.append(replace(rec, text=" ".join(tokens)))
    if n_empty:
        logger.warning(
            "preprocessing left %d record(s) with no tokens", n_empty
        )
    return Corpus(out), decisions


def preprocess_corpus(corpus: Corpus, config: PreprocessConfig) -> Corpus:
    """Run the full five-stage pipeline over a corpus."""
    processed, _ = preprocess_with_decisions(corpus, config)
    return processed

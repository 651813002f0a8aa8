"""Loading, validating, filtering, splitting, and aggregating lyric corpora.

A corpus is an ordered collection of labeled songs. The canonical on-disk
format is JSON Lines with one object per song carrying at least ``id``,
``palo`` (genre label) and ``text``; any additional keys are kept as string
metadata. A CSV reader accepts the same schema (extra columns become
metadata).
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field

from .errors import (
    CorpusIoError,
    DuplicateIdError,
    EmptyCorpusError,
    FormatError,
    StratumTooSmallError,
)
from .seeding import derive_seed

REQUIRED_KEYS = ("id", "palo", "text")


@dataclass(frozen=True)
class LyricRecord:
    """One song: identifier, text, genre label, and optional metadata."""

    id: str
    text: str
    palo: str
    metadata: dict[str, str] = field(default_factory=dict)


class Corpus:
    """Immutable ordered collection of lyric records, indexed by palo.

    Invariants enforced here: at least one record, ids unique and non-empty,
    palo labels non-empty. Text may be empty only in derived corpora (the
    file loaders additionally reject empty text).
    """

    def __init__(self, records):
        records = tuple(records)
        if not records:
            raise EmptyCorpusError("corpus has no records")
        positions: dict[str, int] = {}
        palo_index: dict[str, list[int]] = {}
        for pos, rec in enumerate(records):
            if not rec.id:
                raise FormatError(f"record at position {pos} has an empty id")
            if not rec.palo:
                raise FormatError(f"record {rec.id!r} has an empty palo label")
            if rec.id in positions:
                raise DuplicateIdError(
                    f"duplicate id {rec.id!r} at positions "
                    f"{positions[rec.id]} and {pos}"
                )
            positions[rec.id] = pos
            palo_index.setdefault(rec.palo, []).append(pos)
        self.records: tuple[LyricRecord, ...] = records
        self.palo_index: dict[str, tuple[int, ...]] = {
            p: tuple(ix) for p, ix in palo_index.items()
        }

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self.records == other.records

    @property
    def palos(self) -> tuple[str, ...]:
        """Palo labels in order of first appearance."""
        return tuple(self.palo_index)

    def records_of(self, palo: str) -> tuple[LyricRecord, ...]:
        return tuple(self.records[i] for i in self.palo_index[palo])


@dataclass(frozen=True)
class SplitSpec:
    """Parameters of one stratified train/validation split."""

    train_fraction: float = 0.85
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(
                f"train_fraction must lie strictly between 0 and 1, "
                f"got {self.train_fraction}"
            )


def _stringify(value) -> str:
    # Metadata values are strings; anything else is stored as canonical JSON
    # so that save -> load round-trips.
    return value if isinstance(value, str) else json.dumps(value, ensure_ascii=False)


def _validate_loaded(rec_id, palo, text, line: int):
    if not isinstance(rec_id, str) or not rec_id.strip():
        raise FormatError("'id' must be a non-empty string", line)
    if not isinstance(palo, str) or not palo.strip():
        raise FormatError("'palo' must be a non-empty string", line)
    if not isinstance(text, str) or not text.strip():
        raise FormatError("'text' must be a non-empty string", line)


def load_corpus(path, format: str = "jsonl") -> Corpus:
    """Read a corpus file.

    Args:
        path: file to read.
        format: ``"jsonl"`` (canonical) or ``"csv"``.

    Raises:
        CorpusIoError: unreadable file.
        FormatError: malformed record (message cites the line number).
        DuplicateIdError: repeated id (message cites both line numbers).
        EmptyCorpusError: no records.
    """
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown corpus format {format!r}")
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            if format == "jsonl":
                records, lines = _read_jsonl(fh)
            else:
                records, lines = _read_csv(fh)
    except OSError as exc:
        raise CorpusIoError(f"cannot read corpus file {path}: {exc}") from exc

    seen: dict[str, int] = {}
    for rec, line in zip(records, lines):
        if rec.id in seen:
            raise DuplicateIdError(
                f"duplicate id {rec.id!r} on lines {seen[rec.id]} and {line}"
            )
        seen[rec.id] = line
    if not records:
        raise EmptyCorpusError(f"corpus file {path} contains no records")
    return Corpus(records)


def _read_jsonl(fh):
    records, lines = [], []
    for line_no, raw in enumerate(fh, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise FormatError("record is not a JSON object", line_no)
        missing = [k for k in REQUIRED_KEYS if k not in obj]
        if missing:
            raise FormatError(f"missing required key(s) {missing}", line_no)
        rec_id, palo, text = obj["id"], obj["palo"], obj["text"]
        _validate_loaded(rec_id, palo, text, line_no)
        metadata = {
            k: _stringify(v) for k, v in obj.items() if k not in REQUIRED_KEYS
        }
        records.append(LyricRecord(id=rec_id, text=text, palo=palo, metadata=metadata))
        lines.append(line_no)
    return records, lines


def _read_csv(fh):
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        return [], []
    missing = [k for k in REQUIRED_KEYS if k not in reader.fieldnames]
    if missing:
        raise FormatError(f"CSV header is missing column(s) {missing}", 1)
    records, lines = [], []
    for row in reader:
        line_no = reader.line_num
        if None in row and row[None]:
            raise FormatError("row has more fields than the header", line_no)
        rec_id, palo, text = row["id"], row["palo"], row["text"]
        _validate_loaded(rec_id, palo, text, line_no)
        metadata = {
            k: v for k, v in row.items()
            if k not in REQUIRED_KEYS and k is not None and v is not None
        }
        records.append(LyricRecord(id=rec_id, text=text, palo=palo, metadata=metadata))
        lines.append(line_no)
    return records, lines


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus as JSON Lines (the same schema load_corpus reads)."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in corpus.records:
                obj = {"id": rec.id, "palo": rec.palo, "text": rec.text}
                for k, v in rec.metadata.items():
                    if k not in REQUIRED_KEYS:
                        obj[k] = v
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise CorpusIoError(f"cannot write corpus file {path}: {exc}") from exc


def filter_top_palos(corpus: Corpus, min_lyrics: int) -> Corpus:
    """Keep only records whose palo has at least ``min_lyrics`` records.

    Relative record order is preserved. Raises EmptyCorpusError when no palo
    is represented well enough.
    """
    if min_lyrics < 1:
        raise ValueError(f"min_lyrics must be >= 1, got {min_lyrics}")
    keep = {p for p, ix in corpus.palo_index.items() if len(ix) >= min_lyrics}
    if not keep:
        raise EmptyCorpusError(f"no palo has at least {min_lyrics} lyrics")
    return Corpus(r for r in corpus.records if r.palo in keep)


def stratified_split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Split a corpus into train and validation, stratified by palo.

    Per palo, the train count is round-half-up(train_fraction * n) clamped to
    [1, n-1], so both sides always see every palo. Membership is decided by a
    shuffle-then-cut with a PRNG seeded from (seed, palo name); record order
    within each side follows the original corpus order.

    Raises StratumTooSmallError when some palo has fewer than 2 records.
    """
    train_ix: list[int] = []
    val_ix: list[int] = []
    for palo, positions in corpus.palo_index.items():
        n = len(positions)
        if n < 2:
            raise StratumTooSmallError(
                f"palo {palo!r} has only {n} record(s); need at least 2 to split"
            )
        n_train = math.floor(spec.train_fraction * n + 0.5)  # round half-up
        n_train = min(max(n_train, 1), n - 1)
        order = list(positions)
        random.Random(derive_seed(spec.seed, "stratum", palo)).shuffle(order)
        train_ix.extend(order[:n_train])
        val_ix.extend(order[n_train:])
    train_ix.sort()
    val_ix.sort()
    return (
        Corpus(corpus.records[i] for i in train_ix),
        Corpus(corpus.records[i] for i in val_ix),
    )


def concat_by_palo(corpus: Corpus) -> dict[str, LyricRecord]:
    """Concatenate each palo's lyrics (corpus order, newline-joined) into one
    aggregate record per palo, keyed and id-tagged by the palo name."""
    return {
        palo: LyricRecord(
            id=f"__agg__{palo}",
            text="\n".join(corpus.records[i].text for i in positions),
            palo=palo,
        )
        for palo, positions in corpus.palo_index.items()
    }

"""Query-grouped ranking data and LETOR/SVMLight text ingestion."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

import numpy as np

MAX_LABEL = 4


class LetorParseError(ValueError):
    """Malformed LETOR input. ``lineno`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"{message} at line {lineno}"
        super().__init__(message)


@dataclass(frozen=True)
class Document:
    label: int
    features: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Query:
    """Documents retrieved for one query.

    Stored column-wise: ``labels`` has shape (n,), ``features`` (n, d).
    Both arrays are read-only.
    """

    qid: str
    labels: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        features = np.array(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(len(labels), -1)
        if len(labels) == 0:
            raise ValueError(f"query {self.qid!r} has no documents")
        if features.ndim != 2 or features.shape[0] != len(labels):
            raise ValueError(f"query {self.qid!r}: features shape {features.shape} "
                             f"does not match {len(labels)} labels")
        if labels.min() < 0 or labels.max() > MAX_LABEL:
            raise ValueError(f"query {self.qid!r}: labels must lie in 0..{MAX_LABEL}")
        object.__setattr__(self, "qid", str(self.qid))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "features", _frozen(features))

    @classmethod
    def from_documents(cls, qid: str, documents: Sequence[Document]) -> "Query":
        return cls(qid, [d.label for d in documents],
                   np.array([np.asarray(d.features, dtype=float) for d in documents]))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    @property
    def documents(self) -> list[Document]:
        return [Document(int(l), f) for l, f in zip(self.labels, self.features)]

    def __eq__(self, other):
        if not isinstance(other, Query):
            return NotImplemented
        return (self.qid == other.qid
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.features, other.features))

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    queries: tuple[Query, ...]
    feature_count: int
    feature_names: Optional[tuple[str, ...]] = field(default=None)

    def __post_init__(self):
        queries = tuple(self.queries)
        object.__setattr__(self, "queries", queries)
        if self.feature_count < 1:
            raise ValueError("feature_count must be positive")
        seen = set()
        for q in queries:
            if q.qid in seen:
                raise ValueError(f"duplicate qid {q.qid!r}")
            seen.add(q.qid)
            if q.feature_count != self.feature_count:
                raise ValueError(f"query {q.qid!r} has {q.feature_count} features, "
                                 f"dataset declares {self.feature_count}")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != self.feature_count:
                raise ValueError("feature_names length differs from feature_count")
            object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self) -> Iterator[Query]:
        return iter(self.queries)

    @property
    def qids(self) -> list[str]:
        return [q.qid for q in self.queries]

    @property
    def document_count(self) -> int:
        return sum(len(q) for q in self.queries)

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (features, labels, offsets) with all documents concatenated.

        Query ``i`` occupies rows ``offsets[i]:offsets[i + 1]``.
        """
        offsets = np.zeros(len(self.queries) + 1, dtype=np.int64)
        np.cumsum([len(q) for q in self.queries], out=offsets[1:])
        if not self.queries:
            return np.zeros((0, self.feature_count)), np.zeros(0, dtype=np.int64), offsets
        X = np.concatenate([q.features for q in self.queries])
        y = np.concatenate([q.labels for q in self.queries])
        return X, y, offsets

    def subset(self, qids: Iterable[str]) -> "Dataset":
        by_id = {q.qid: q for q in self.queries}
        return Dataset(tuple(by_id[i] for i in qids), self.feature_count, self.feature_names)


def _iter_lines(source: Union[str, TextIO, Iterable[str]]) -> Iterable[str]:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def parse_letor(source: Union[str, TextIO, Iterable[str]]) -> Dataset:
    """Parse LETOR/SVMLight ranking text into a :class:`Dataset`.

    ``source`` is the file content as a string, or any iterable of lines
    (an open text file works). Lines look like ``<label> qid:<id> <fid>:<v> ...``
    with an optional ``# comment`` tail. Feature ids are 1-based; absent ids
    are filled with 0.0 and the dataset width is the largest id seen.
    """
    groups: dict[str, list[tuple[int, dict[int, float]]]] = {}
    max_fid = 0
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = int(tokens[0])
        except ValueError:
            raise LetorParseError(f"non-integer label {tokens[0]!r}", lineno) from None
        if not 0 <= label <= MAX_LABEL:
            raise LetorParseError("label out of range", lineno)
        if len(tokens) < 2 or not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
            raise LetorParseError("missing qid", lineno)
        qid = tokens[1][4:]
        values: dict[int, float] = {}
        for tok in tokens[2:]:
            fid_s, sep, val_s = tok.partition(":")
            try:
                fid = int(fid_s)
                val = float(val_s)
            except ValueError:
                raise LetorParseError(f"unparsable feature {tok!r}", lineno) from None
            if not sep or fid < 1:
                raise LetorParseError(f"unparsable feature {tok!r}", lineno)
            if not math.isfinite(val):
                raise LetorParseError(f"non-finite feature value {tok!r}", lineno)
            values[fid] = val
            max_fid = max(max_fid, fid)
        groups.setdefault(qid, []).append((label, values))

    if not groups:
        raise LetorParseError("empty dataset")
    if max_fid == 0:
        raise LetorParseError("dataset has no features")

    queries = []
    for qid, rows in groups.items():
        X = np.zeros((len(rows), max_fid))
        for r, (_, values) in enumerate(rows):
            for fid, val in values.items():
                X[r, fid - 1] = val
        queries.append(Query(qid, [lab for lab, _ in rows], X))
    return Dataset(tuple(queries), max_fid)


def read_letor(path) -> Dataset:
    with open(path, encoding="utf-8", newline=None) as f:
        try:
            return parse_letor(f)
        except LetorParseError as e:
            err = LetorParseError(f"{os.fspath(path)}: {e}")
            err.lineno = e.lineno
            raise err from None


def format_letor(dataset: Dataset) -> str:
    """Serialize densely (every feature id written) so parsing restores the width."""
    out = []
    for q in dataset.queries:
        for label, row in zip(q.labels, q.features):
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(row))
            out.append(f"{int(label)} qid:{q.qid} {feats}\n")
    return "".join(out)


def write_letor(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_letor(dataset))


def _largest_remainder(n: int, fractions: Sequence[float]) -> list[int]:
    quotas = [n * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(fractions)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    # every part gets at least one query; borrow from the largest
    for i in range(len(counts)):
        if counts[i] == 0:
            donor = max(range(len(counts)), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return counts


def split_dataset(dataset: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0
                  ) -> tuple[Dataset, Dataset, Dataset]:
    """Partition queries into train/validation/test parts.

    Queries are shuffled with a seeded generator and cut into consecutive
    blocks whose sizes come from largest-remainder rounding. A query's
    documents are never split. Each part keeps the shuffled order.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("fractions must be three positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    n = len(dataset.queries)
    if n < 3:
        raise ValueError("need at least 3 queries to split")
    counts = _largest_remainder(n, fractions)
    perm = np.random.default_rng(seed).permutation(n)
    parts = []
    start = 0
    for c in counts:
        idx = perm[start:start + c]
        parts.append(Dataset(tuple(dataset.queries[i] for i in idx),
                             dataset.feature_count, dataset.feature_names))
        start += c
    return parts[0], parts[1], parts[2]

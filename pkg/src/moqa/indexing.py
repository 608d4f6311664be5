"""Per-modality embedding indexes with exact brute-force top-K search.

Index file layout (little-endian, bit-exact):

    magic "MOQI" | version u32 = 1 | metric u8 (0=inner_product, 1=cosine)
    | dim u32 | count u64 | count*dim float32 row-major
    | count * (id_len u16 + UTF-8 id bytes)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Modality
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    DuplicateIdError,
    TruncatedIndexError,
    VersionMismatchError,
    ZeroQueryError,
    ZeroVectorError,
)

MAGIC = b"MOQI"
FORMAT_VERSION = 1


class Metric(str, Enum):
    INNER_PRODUCT = "inner_product"
    COSINE = "cosine"


_METRIC_CODES = {Metric.INNER_PRODUCT: 0, Metric.COSINE: 1}
_CODE_METRICS = {v: k for k, v in _METRIC_CODES.items()}


@dataclass(frozen=True)
class RetrievedItem:
    reference_id: str
    score: float
    rank: int


@dataclass
class RetrievedSet:
    """Top-K results per modality for one question."""

    text: list[RetrievedItem]
    table: list[RetrievedItem]
    image: list[RetrievedItem]

    def for_modality(self, modality: Modality) -> list[RetrievedItem]:
        return getattr(self, modality.value)

    def all_ids(self) -> list[str]:
        return [
            item.reference_id
            for items in (self.image, self.text, self.table)
            for item in items
        ]


class EmbeddingIndex:
    """Immutable matrix of float32 vectors addressable by reference id."""

    def __init__(self, modality: Modality, metric: Metric, ids, vectors):
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise DimensionMismatchError(
                f"expected a 2-d matrix, got shape {vectors.shape}"
            )
        ids = [str(i) for i in ids]
        if len(ids) != vectors.shape[0]:
            raise DimensionMismatchError(
                f"{len(ids)} ids for {vectors.shape[0]} vectors"
            )
        if len(set(ids)) != len(ids):
            seen = set()
            for i in ids:
                if i in seen:
                    raise DuplicateIdError(i)
                seen.add(i)
        self.modality = modality
        self.metric = metric
        self.ids = ids
        self.vectors = vectors
        self.dim = int(vectors.shape[1])
        self._row_of = {ref_id: row for row, ref_id in enumerate(ids)}
        if metric is Metric.COSINE:
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
            zero_rows = np.nonzero(norms == 0.0)[0]
            if zero_rows.size:
                raise ZeroVectorError(
                    f"zero vector at row {int(zero_rows[0])} "
                    f"(id {ids[int(zero_rows[0])]!r}) under cosine metric"
                )
            self.norms = norms
        else:
            self.norms = None

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingIndex):
            return NotImplemented
        return (
            self.modality == other.modality
            and self.metric == other.metric
            and self.ids == other.ids
            and self.vectors.shape == other.vectors.shape
            and bool(np.all(self.vectors == other.vectors))
        )

    def search(self, query, k: int, restrict_ids=None) -> list[RetrievedItem]:
        """Exact top-k by score, ties broken by ascending row order.

        ``restrict_ids`` limits scoring to the given reference ids
        (unknown ids are ignored).
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"query dim {query.shape[0]} != index dim {self.dim}"
            )
        rows = None
        if restrict_ids is not None:
            rows = [self._row_of[r] for r in restrict_ids if r in self._row_of]
            if not rows:
                return []
            rows = sorted(set(rows))
        # float32 storage, float64 accumulation
        matrix = self.vectors if rows is None else self.vectors[rows]
        scores = matrix.astype(np.float64) @ query
        if self.metric is Metric.COSINE:
            qnorm = float(np.linalg.norm(query))
            if qnorm == 0.0:
                raise ZeroQueryError("zero query vector under cosine metric")
            norms = self.norms if rows is None else self.norms[rows]
            scores = scores / (qnorm * norms)
        order = np.argsort(-scores, kind="stable")[: min(k, scores.shape[0])]
        results = []
        for rank, pos in enumerate(order, start=1):
            row = pos if rows is None else rows[pos]
            results.append(
                RetrievedItem(
                    reference_id=self.ids[row],
                    score=float(scores[pos]),
                    rank=rank,
                )
            )
        return results


def build_index(vectors, ids, metric: Metric, modality: Modality) -> EmbeddingIndex:
    return EmbeddingIndex(modality=modality, metric=metric, ids=ids, vectors=vectors)


def save_index(index: EmbeddingIndex, path) -> None:
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<B", _METRIC_CODES[index.metric]))
        fh.write(struct.pack("<I", index.dim))
        fh.write(struct.pack("<Q", len(index)))
        fh.write(index.vectors.astype("<f4", copy=False).tobytes(order="C"))
        for ref_id in index.ids:
            encoded = ref_id.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedIndexError(f"truncated file while reading {what}")
    return data


def load_index(path, modality: Optional[Modality] = None) -> EmbeddingIndex:
    path = Path(path)
    with path.open("rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"unsupported version {version}, expected {FORMAT_VERSION}"
            )
        (metric_code,) = struct.unpack("<B", _read_exact(fh, 1, "metric"))
        if metric_code not in _CODE_METRICS:
            raise BadMagicError(f"unknown metric code {metric_code}")
        (dim,) = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "count"))
        raw = _read_exact(fh, count * dim * 4, "vector matrix")
        vectors = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
        ids = []
        for _ in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(fh, 2, "id length"))
            ids.append(_read_exact(fh, id_len, "id bytes").decode("utf-8"))
    return EmbeddingIndex(
        modality=modality or Modality.TEXT,
        metric=_CODE_METRICS[metric_code],
        ids=ids,
        vectors=vectors,
    )


def inspect_index(path) -> dict:
    """Header summary without materializing vectors."""
    path = Path(path)
    with path.open("rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"unsupported version {version}, expected {FORMAT_VERSION}"
            )
        (metric_code,) = struct.unpack("<B", _read_exact(fh, 1, "metric"))
        (dim,) = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "count"))
    return {
        "version": version,
        "metric": _CODE_METRICS.get(metric_code, f"unknown({metric_code})"),
        "dim": dim,
        "count": count,
    }

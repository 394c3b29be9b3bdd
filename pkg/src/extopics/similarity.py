"""Sparse symmetric Dice similarity over vocabulary terms.

Co-document counts come from a doc-by-term incidence product computed in
fixed column blocks (an inverted-index traversal, never an all-pairs scan).
Entries below the cutoff are dropped; the diagonal is always 1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._parallel import fixed_chunks, map_chunks
from .vocabulary import Vocabulary

DEFAULT_CUTOFF = 0.05

_MAGIC = b"EXSIM001"
_BLOCK_ROWS = 1024


def dice(df_i: int, df_j: int, codf_ij: int) -> float:
    """Dice coefficient 2*|A∩B| / (|A|+|B|) from posting-set sizes."""
    if df_i < 1 or df_j < 1:
        raise ValueError("document frequencies must be >= 1")
    if codf_ij < 0 or codf_ij > min(df_i, df_j):
        raise ValueError(
            f"co-document count {codf_ij} exceeds min(df_i, df_j)="
            f"{min(df_i, df_j)}"
        )
    return 2.0 * codf_ij / (df_i + df_j)


@dataclass(frozen=True)
class SparseSimilarity:
    """Symmetric CSR matrix of Dice coefficients with unit diagonal.

    Stored off-diagonal values are >= the build cutoff; absent entries
    mean similarity zero.  Row indices are sorted and duplicate-free.
    """

    matrix: sp.csr_matrix
    cutoff: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def density(self) -> float:
        return self.nnz / (self.n * self.n)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(column ids, values) of stored entries in row i."""
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @classmethod
    def from_dense(cls, array, cutoff: float = 0.0) -> "SparseSimilarity":
        """Build from a dense symmetric array (small instances, tests)."""
        a = np.array(array, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("similarity array must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("similarity array must be symmetric")
        np.fill_diagonal(a, 1.0)
        m = sp.csr_matrix(a)
        m.sort_indices()
        return cls(matrix=m, cutoff=cutoff)

    def validate(self) -> None:
        """Check symmetry, unit diagonal, and the cutoff bound (tests)."""
        m = self.matrix
        if (m != m.T).nnz != 0:
            raise AssertionError("similarity matrix not symmetric")
        if not np.all(m.diagonal() == 1.0):
            raise AssertionError("similarity diagonal is not all ones")
        coo = m.tocoo()
        off = coo.row != coo.col
        vals = coo.data[off]
        if vals.size and (vals.min() < self.cutoff or vals.max() > 1.0):
            raise AssertionError("off-diagonal value outside [cutoff, 1]")

    def save(self, path: str | Path) -> None:
        m = self.matrix
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<qq", self.n, self.nnz))
            fh.write(struct.pack("<d", self.cutoff))
            fh.write(m.indptr.astype("<i8").tobytes())
            fh.write(m.indices.astype("<i8").tobytes())
            fh.write(m.data.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "SparseSimilarity":
        with open(path, "rb") as fh:
            magic = fh.read(len(_MAGIC))
            if magic != _MAGIC:
                raise ValueError(
                    f"{path}: not a similarity cache (bad magic {magic!r})"
                )
            n, nnz = struct.unpack("<qq", fh.read(16))
            (cutoff,) = struct.unpack("<d", fh.read(8))
            indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8")
            indices = np.frombuffer(fh.read(8 * nnz), dtype="<i8")
            data = np.frombuffer(fh.read(8 * nnz), dtype="<f8")
        matrix = sp.csr_matrix(
            (data.copy(), indices.astype(np.int64), indptr.astype(np.int64)),
            shape=(n, n),
        )
        return cls(matrix=matrix, cutoff=cutoff)


def _incidence(vocab: Vocabulary) -> sp.csr_matrix:
    """Binary doc-by-term incidence matrix from vocabulary postings."""
    n_terms = vocab.n
    lengths = np.array([p.size for p in vocab.postings], dtype=np.int64)
    cols = np.repeat(np.arange(n_terms, dtype=np.int32), lengths)
    rows = (
        np.concatenate(vocab.postings)
        if n_terms
        else np.empty(0, dtype=np.int32)
    )
    data = np.ones(rows.size, dtype=np.float64)
    return sp.csr_matrix(
        (data, (rows, cols)), shape=(vocab.n_docs, n_terms)
    )


def build_similarity(
    vocab: Vocabulary,
    cutoff: float = DEFAULT_CUTOFF,
    threads: int | None = None,
) -> SparseSimilarity:
    """Dice similarity of every co-occurring term pair, thresholded.

    Works block-by-block over term rows: each block is one sparse product
    of the transposed incidence slice with the incidence matrix, then the
    Dice transform and cutoff are applied before the next block, bounding
    peak memory.  Block partitioning is fixed, so results do not depend
    on the thread count.
    """
    if not 0.0 <= cutoff < 1.0:
        raise ValueError(f"cutoff must be in [0, 1), got {cutoff}")
    n = vocab.n
    incidence = _incidence(vocab)
    inc_t = incidence.T.tocsr()
    df = vocab.df.astype(np.float64)

    def block_entries(chunk: tuple[int, int]):
        lo, hi = chunk
        co = (inc_t[lo:hi] @ incidence).tocoo()
        rows = co.row.astype(np.int64) + lo
        cols = co.col.astype(np.int64)
        sim = 2.0 * co.data / (df[rows] + df[cols])
        keep = (sim >= cutoff) & (rows != cols)
        return rows[keep], cols[keep], sim[keep]

    parts = map_chunks(block_entries, fixed_chunks(n, _BLOCK_ROWS), threads)
    rows = np.concatenate([p[0] for p in parts]) if parts else np.empty(0, np.int64)
    cols = np.concatenate([p[1] for p in parts]) if parts else np.empty(0, np.int64)
    vals = np.concatenate([p[2] for p in parts]) if parts else np.empty(0, np.float64)

    off_diag = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    matrix = (off_diag + sp.identity(n, format="csr", dtype=np.float64)).tocsr()
    matrix.sort_indices()
    return SparseSimilarity(matrix=matrix, cutoff=cutoff)

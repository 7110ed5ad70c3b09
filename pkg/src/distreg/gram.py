"""Training Gram matrices, test-vs-train cross blocks, and spectrum extraction.

Entries are outer-kernel values on empirical mean embeddings, with the row
bag always in the first kernel slot. Assembly reduces every entry to
embedding inner products, computed as exact double sums in a fixed canonical
order (chunked vectorized reductions); identical inputs therefore produce
bitwise-identical matrices regardless of thread count. Dense storage only.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .embedding import Bag, EmbeddingKernelSpec, embed_inner, kernel_matrix
from .errors import InputError
from .outer import OuterKernelSpec

# Upper bound on the number of pointwise kernel values held in memory by one
# chunk of the double-sum reduction (~64 MB of float64).
_CHUNK_BUDGET = 8_000_000

_SCALE_NOTE = (
    "singular values and eigenvalues are those of (1/m) * gram; empirical "
    "proxies for the integral-operator spectrum"
)


def default_threads() -> int:
    """Thread count for Gram assembly: DISTREG_THREADS if set, else 1."""
    raw = os.environ.get("DISTREG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def kernel_fingerprint(kspec: OuterKernelSpec, espec: EmbeddingKernelSpec) -> str:
    """Stable hash of the (outer, embedding) kernel pair, for provenance checks."""
    doc = json.dumps(
        {"outer": kspec.to_dict(), "embedding": espec.to_dict()},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GramMatrix:
    """An m x m outer-kernel matrix plus provenance."""

    values: np.ndarray
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    kernel_fingerprint: str

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def square(self) -> bool:
        return self.values.shape[0] == self.values.shape[1]


@dataclass(frozen=True)
class SpectrumReport:
    """Descending spectrum of (1/m) * gram.

    `eigenvalues` is populated only when the matrix is numerically symmetric.
    """

    singular_values: np.ndarray
    eigenvalues: np.ndarray | None
    scale_note: str = _SCALE_NOTE


def _check_bag_dims(espec: EmbeddingKernelSpec, bags: Sequence[Bag]) -> None:
    for b in bags:
        if b.dim != espec.dim:
            raise InputError(
                f"bag {b.id!r} has dimension {b.dim}, kernel expects {espec.dim}"
            )


def _row_block_sums(
    espec: EmbeddingKernelSpec, row: Bag, cols: Sequence[Bag]
) -> np.ndarray:
    """Sum of pointwise kernel values between `row` and each bag in `cols`.

    Column bags are concatenated and processed in chunks; per-bag segments are
    reduced with np.add.reduceat, so the reduction order for any (row, col)
    pair does not depend on how bags are grouped into chunks.
    """
    out = np.empty(len(cols))
    chunk_cap = max(1, _CHUNK_BUDGET // row.size)
    start = 0
    while start < len(cols):
        stop = start
        total_pts = 0
        while stop < len(cols) and (total_pts + cols[stop].size <= chunk_cap or stop == start):
            total_pts += cols[stop].size
            stop += 1
        block = cols[start:stop]
        pts = np.concatenate([b.points for b in block], axis=0)
        kmat = kernel_matrix(espec, row.points, pts)
        offsets = np.cumsum([0] + [b.size for b in block[:-1]])
        out[start:stop] = np.add.reduceat(kmat, offsets, axis=1).sum(axis=0)
        start = stop
    return out


def _embedding_inner_symmetric(
    espec: EmbeddingKernelSpec, bags: Sequence[Bag], threads: int
) -> np.ndarray:
    """Matrix of embedding inner products over one bag list, exactly symmetric.

    Only the upper triangle (row i vs bags j >= i) is computed; the lower
    triangle is mirrored.
    """
    m = len(bags)
    sizes = np.array([b.size for b in bags], dtype=np.float64)
    inner = np.zeros((m, m))

    def fill_row(i: int) -> None:
        sums = _row_block_sums(espec, bags[i], bags[i:])
        inner[i, i:] = sums / (sizes[i] * sizes[i:])

    if threads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(m)))
    else:
        for i in range(m):
            fill_row(i)
    upper = np.triu(inner)
    return upper + np.triu(inner, k=1).T


def _embedding_inner_cross(
    espec: EmbeddingKernelSpec,
    row_bags: Sequence[Bag],
    col_bags: Sequence[Bag],
    threads: int,
) -> np.ndarray:
    row_sizes = np.array([b.size for b in row_bags], dtype=np.float64)
    col_sizes = np.array([b.size for b in col_bags], dtype=np.float64)
    inner = np.zeros((len(row_bags), len(col_bags)))

    def fill_row(i: int) -> None:
        inner[i, :] = _row_block_sums(espec, row_bags[i], col_bags) / (
            row_sizes[i] * col_sizes
        )

    if threads > 1 and len(row_bags) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(len(row_bags))))
    else:
        for i in range(len(row_bags)):
            fill_row(i)
    return inner


def _self_inners(
    espec: EmbeddingKernelSpec, bags: Sequence[Bag], threads: int
) -> np.ndarray:
    out = np.empty(len(bags))

    def fill(i: int) -> None:
        b = bags[i]
        out[i] = _row_block_sums(espec, b, [b])[0] / (b.size * b.size)

    if threads > 1 and len(bags) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(bags))))
    else:
        for i in range(len(bags)):
            fill(i)
    return out


def _apply_outer(
    kspec: OuterKernelSpec,
    espec: EmbeddingKernelSpec,
    inner: np.ndarray,
    row_self: np.ndarray,
    col_self: np.ndarray,
    row_bags: Sequence[Bag],
) -> np.ndarray:
    """Map embedding geometry to outer-kernel values, row bag in first slot."""
    if kspec.family == "linear_embedding":
        return inner.copy()
    if kspec.family == "tanh_indefinite":
        return np.tanh(kspec.scale * inner + kspec.offset)
    d2 = np.clip(row_self[:, None] + col_self[None, :] - 2.0 * inner, 0.0, None)
    if kspec.family == "gaussian_on_embedding":
        return np.exp(-0.5 * d2 / kspec.sigma**2)
    if kspec.family == "dog_indefinite":
        return np.exp(-0.5 * d2 / kspec.sigma1**2) - kspec.c * np.exp(
            -0.5 * d2 / kspec.sigma2**2
        )
    # tilted_asymmetric: the tilt is a function of the row bag only
    tilt = np.array(
        [1.0 + kspec.c * embed_inner(espec, b, kspec.ref_bag) for b in row_bags]
    )
    return np.exp(-0.5 * d2 / kspec.sigma**2) * tilt[:, None]


def build_gram(
    kspec: OuterKernelSpec,
    espec: EmbeddingKernelSpec,
    bags: Sequence[Bag],
    threads: int | None = None,
) -> GramMatrix:
    """Assemble the m x m training Gram matrix K(mu_i, mu_j).

    For symmetric outer kernels the embedding geometry is computed on the
    upper triangle and mirrored, making the result exactly symmetric.
    """
    if len(bags) < 1:
        raise InputError("build_gram needs at least one bag")
    _check_bag_dims(espec, bags)
    threads = default_threads() if threads is None else max(1, threads)
    inner = _embedding_inner_symmetric(espec, bags, threads)
    self_inners = np.diag(inner).copy()
    values = _apply_outer(kspec, espec, inner, self_inners, self_inners, bags)
    ids = tuple(b.id for b in bags)
    return GramMatrix(
        values=values,
        row_ids=ids,
        col_ids=ids,
        kernel_fingerprint=kernel_fingerprint(kspec, espec),
    )


def build_cross_gram(
    kspec: OuterKernelSpec,
    espec: EmbeddingKernelSpec,
    test_bags: Sequence[Bag],
    train_bags: Sequence[Bag],
    threads: int | None = None,
) -> np.ndarray:
    """Test-vs-train block K(mu_test_t, mu_train_i), test embedding first.

    For asymmetric kernels the argument order matters and is test-first,
    matching the prediction formula.
    """
    if len(test_bags) < 1 or len(train_bags) < 1:
        raise InputError("build_cross_gram needs nonempty bag lists")
    _check_bag_dims(espec, list(test_bags) + list(train_bags))
    threads = default_threads() if threads is None else max(1, threads)
    inner = _embedding_inner_cross(espec, test_bags, train_bags, threads)
    row_self = _self_inners(espec, test_bags, threads)
    col_self = _self_inners(espec, train_bags, threads)
    return _apply_outer(kspec, espec, inner, row_self, col_self, test_bags)


def spectrum(g: GramMatrix, symmetry_tol: float = 1e-10) -> SpectrumReport:
    """Spectrum of (1/m) * gram: singular values, plus eigenvalues if symmetric."""
    if not g.square:
        raise InputError("spectrum requires a square Gram matrix")
    scaled = g.values / g.m
    singular = np.sort(scipy.linalg.svdvals(scaled))[::-1]
    eigenvalues = None
    if np.max(np.abs(g.values - g.values.T)) <= symmetry_tol:
        sym = 0.5 * (scaled + scaled.T)
        eigenvalues = np.sort(scipy.linalg.eigh(sym, eigvals_only=True))[::-1]
    return SpectrumReport(singular_values=singular, eigenvalues=eigenvalues)

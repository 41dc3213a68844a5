"""Basis-label bookkeeping: blocks, distances, pairwise decomposition, reordering.

A *block* is a finite set of basis labels (integers giving positions in an
ordered representation basis).  A Hermitian matrix decomposes into terms
supported on blocks; here we use the pairwise decomposition: one singleton
block per nonzero diagonal entry and one two-label block per nonzero
unordered off-diagonal pair.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# entries at or below this magnitude are treated as structural zeros
STRUCTURAL_ZERO = 1e-14
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class Block:
    """A sorted, duplicate-free set of basis labels."""

    labels: tuple[int, ...]

    def __init__(self, labels):
        labs = sorted(set(int(i) for i in labels))
        if not labs:
            raise ValidationError("a block must contain at least one label")
        if labs[0] < 0:
            raise ValidationError(f"labels must be nonnegative, got {labs[0]}")
        object.__setattr__(self, "labels", tuple(labs))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def diameter(self) -> int:
        return self.labels[-1] - self.labels[0]

    def intersects(self, other: "Block") -> bool:
        return bool(set(self.labels) & set(other.labels))

    def __contains__(self, label: int) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)


def diameter(block: Block) -> int:
    """Largest minus smallest label of the block."""
    return block.diameter


def block_distance(a: Block, b: Block) -> int:
    """Minimum |j - i| over i in a, j in b; 0 iff the blocks share a label
    or touch at equal labels."""
    # labels are sorted, so a two-pointer sweep suffices; sizes here are small
    return min(abs(j - i) for i in a.labels for j in b.labels)


@dataclass(eq=False)
class BlockDecomposition:
    """A matrix written as a sum of block-supported terms.

    Each term matrix lives in the full dimension but is supported exactly on
    its block's rows and columns; the terms sum back to the original matrix.
    """

    terms: list[tuple[Block, np.ndarray]]
    dimension: int

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        for _, mat in self.terms:
            out += mat
        return out

    def term_norms(self) -> list[tuple[Block, float]]:
        """Operator norm of each term, computed on the block submatrix."""
        out = []
        for block, mat in self.terms:
            idx = np.asarray(block.labels)
            sub = mat[np.ix_(idx, idx)]
            out.append((block, float(np.linalg.norm(sub, 2))))
        return out


def _check_hermitian(H: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 0.0)
    defect = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if defect > tol * scale:
        raise ValidationError(
            f"matrix is not Hermitian: max |H - H^dag| = {defect:.3e}"
        )
    return H


def pairwise_decompose(H: np.ndarray) -> BlockDecomposition:
    """Decompose a Hermitian matrix into singleton and pair blocks.

    Diagonal entry H[i,i] yields the singleton term H_ii |i><i|; each
    unordered pair {i,j} with a nonzero coupling yields the term
    H_ij |i><j| + H_ji |j><i|, whose operator norm equals |H_ij|.
    Entries at or below STRUCTURAL_ZERO produce no term.
    """
    H = _check_hermitian(H)
    n = H.shape[0]
    terms: list[tuple[Block, np.ndarray]] = []
    for i in range(n):
        if abs(H[i, i]) > STRUCTURAL_ZERO:
            mat = np.zeros((n, n), dtype=complex)
            mat[i, i] = H[i, i]
            terms.append((Block([i]), mat))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(H[i, j]) > STRUCTURAL_ZERO or abs(H[j, i]) > STRUCTURAL_ZERO:
                mat = np.zeros((n, n), dtype=complex)
                mat[i, j] = H[i, j]
                mat[j, i] = H[j, i]
                terms.append((Block([i, j]), mat))
    return BlockDecomposition(terms=terms, dimension=n)


def bandwidth(H: np.ndarray) -> int:
    """Max |i - j| over entries above the structural-zero threshold."""
    H = np.asarray(H)
    rows, cols = np.nonzero(np.abs(H) > STRUCTURAL_ZERO)
    if rows.size == 0:
        return 0
    return int(np.max(np.abs(rows - cols)))


def apply_permutation(H: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Relabel basis indices: result[perm[i], perm[j]] = H[i, j]."""
    perm = np.asarray(perm, dtype=int)
    inv = np.argsort(perm)  # inv[new] = old
    return np.asarray(H)[np.ix_(inv, inv)]


def reorder_basis(H: np.ndarray, strategy: str = "bandwidth_greedy") -> np.ndarray:
    """Choose a basis relabeling; returns perm with perm[old] = new.

    "identity" keeps the input ordering.  "bandwidth_greedy" runs a
    Cuthill-McKee-style breadth-first relabeling on the weighted adjacency
    graph (edge weight |H_ij|), visiting strong couplings first so that
    large |H_ij| pairs end up with nearby labels.  Ties break by ascending
    original label, which makes the result deterministic.
    """
    H = _check_hermitian(H)
    n = H.shape[0]
    if strategy == "identity":
        return np.arange(n)
    if strategy != "bandwidth_greedy":
        raise ValidationError(f"unknown reorder strategy: {strategy!r}")

    W = np.abs(H).astype(float)
    np.fill_diagonal(W, 0.0)
    W[W <= STRUCTURAL_ZERO] = 0.0
    wdeg = W.sum(axis=1)

    visited = np.zeros(n, dtype=bool)
    order: list[int] = []  # order[new] = old
    while len(order) < n:
        start = min(
            (i for i in range(n) if not visited[i]), key=lambda i: (wdeg[i], i)
        )
        visited[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            order.append(u)
            nbrs = [v for v in range(n) if not visited[v] and W[u, v] > 0.0]
            nbrs.sort(key=lambda v: (-W[u, v], v))
            for v in nbrs:
                visited[v] = True
                queue.append(v)

    perm = np.empty(n, dtype=int)
    perm[np.asarray(order)] = np.arange(n)
    return perm

"""Entry sums, sign involutions and the all-ones matrix exponential.

Involutions ``I_{i,q}`` are diagonal with entries in {-1, +1}; they are kept as
sign vectors and every conjugation ``I M I`` is done by flipping signs of rows
and columns.  All norms are max-norms: ``max |z_i|`` for vectors and the
induced (max row sum) norm for matrices.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Involution:
    """Diagonal sign matrix with at most one ``-1`` entry.

    ``index == 0`` is the identity; ``index == i`` flips coordinate ``i``
    (1-based, as in the usual indexing of ``I_{i,q}``).
    """

    index: int
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if not 0 <= self.index <= self.dim:
            raise ValueError(f"involution index {self.index} outside 0..{self.dim}")

    @property
    def signs(self):
        v = np.ones(self.dim)
        if self.index >= 1:
            v[self.index - 1] = -1.0
        return v

    def apply(self, y):
        """Left-multiply a vector (or the last axis of a stack of vectors)."""
        return np.asarray(y, dtype=float) * self.signs

    def conjugate(self, m):
        """Return ``I M I`` for a square matrix or a stack of them."""
        s = self.signs
        return np.asarray(m, dtype=float) * s[:, None] * s[None, :]

    def negated(self):
        """The element ``-I`` of the signed family; returned as a sign vector."""
        return -self.signs

    def as_matrix(self):
        return np.diag(self.signs)


def involution(i, q):
    return Involution(int(i), int(q))


def all_involutions(q):
    """``I_{0,q}, ..., I_{q,q}``."""
    return [Involution(i, q) for i in range(q + 1)]


def signed_family(q):
    """Sign vectors of ``{I} U {-I}`` over all involutions of dimension q."""
    out = []
    for inv in all_involutions(q):
        out.append(inv.signs)
        out.append(-inv.signs)
    return out


def sum_entries(m):
    """Sum of every entry of a vector or matrix."""
    return float(np.sum(np.asarray(m, dtype=float)))


def recover_component(y, i):
    """Return ``y_i`` (1-based) through ``(sum(y) - sum(I_i y)) / 2``."""
    y = np.asarray(y, dtype=float)
    q = y.shape[-1]
    if not 1 <= i <= q:
        raise ValueError(f"component index {i} outside 1..{q}")
    inv = Involution(i, q)
    return 0.5 * (sum_entries(y) - sum_entries(inv.apply(y)))


def ones_exp(t, q):
    """Closed form of ``exp(t * J)`` for the q x q all-ones matrix J."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return np.eye(q) + (np.expm1(q * t) / q) * np.ones((q, q))


def max_norm(a):
    """Max-norm of a vector, or the induced max-row-sum norm of a matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim <= 1:
        return float(np.max(np.abs(a))) if a.size else 0.0
    if a.ndim == 2:
        return float(np.max(np.sum(np.abs(a), axis=1)))
    # 3-tensors (quadratic maps): max over the first index of the entry sum
    return float(np.max(np.sum(np.abs(a), axis=tuple(range(1, a.ndim)))))


def in_open_cone(z):
    """``z > 0`` entrywise."""
    return bool(np.all(np.asarray(z, dtype=float) > 0.0))


def in_closed_cone(z):
    """``z >= 0`` entrywise."""
    return bool(np.all(np.asarray(z, dtype=float) >= 0.0))


@dataclass(frozen=True)
class ConeMembership:
    dim: int
    positive: bool
    nonnegative: bool


def cone_membership(z):
    z = np.asarray(z, dtype=float)
    return ConeMembership(z.shape[-1], in_open_cone(z), in_closed_cone(z))


def kernel_traces(m):
    """``sigma(I_i M I_i)`` for i = 0..q, for a matrix or a stack (..., q, q).

    Returns an array of shape (..., q+1).  Uses
    ``sigma(I_i M I_i) = sigma(M) - 2 (row_i + col_i - 2 M_ii)``.
    """
    m = np.asarray(m, dtype=float)
    total = m.sum(axis=(-2, -1))
    rows = m.sum(axis=-1)
    cols = m.sum(axis=-2)
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    flips = total[..., None] - 2.0 * (rows + cols - 2.0 * diag)
    return np.concatenate([total[..., None], flips], axis=-1)


def signed_sums(u):
    """``sigma(I_i u)`` for i = 0..q, for a vector or a stack (..., q)."""
    u = np.asarray(u, dtype=float)
    total = u.sum(axis=-1)
    return np.concatenate([total[..., None], total[..., None] - 2.0 * u], axis=-1)

"""Finite-dimensional real Hilbert spaces and their products.

Vectors of a single space are plain one-dimensional ``float64`` numpy
arrays; :func:`vector` is the validating constructor. Elements of a
product space ``H x G_1 x ... x G_m`` are :class:`ProductVector` values
with a head block and ``m`` further blocks, equipped with the sum of the
blockwise inner products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError


def vector(coords, dim: int | None = None) -> np.ndarray:
    """Return a read-only finite 1-D float array built from ``coords``.

    Scalars are promoted to 1-vectors. Raises :class:`NonFiniteError` if a
    coordinate is NaN or infinite and :class:`DimensionError` if ``dim`` is
    given and does not match.
    """
    x = np.array(coords, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("vector has non-finite coordinates")
    x.setflags(write=False)
    return x


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {y.shape}")


def inner(x, y) -> float:
    """Standard dot product of two vectors of equal dimension."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_same_dim(x, y)
    return float(np.dot(x, y))


def norm(x) -> float:
    """Euclidean norm ``sqrt(inner(x, x))``, computed without intermediate under- or overflow."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {x.shape}")
    return math.hypot(*x)


def combine(coeffs: Sequence[float], vectors: Sequence) -> np.ndarray:
    """Linear combination ``sum_i coeffs[i] * vectors[i]``."""
    if len(coeffs) == 0 or len(vectors) == 0:
        raise ValueError("combine needs at least one term")
    if len(coeffs) != len(vectors):
        raise ValueError(f"{len(coeffs)} coefficients for {len(vectors)} vectors")
    vs = [np.asarray(v, dtype=float) for v in vectors]
    out = coeffs[0] * vs[0]
    for c, v in zip(coeffs[1:], vs[1:]):
        _check_same_dim(vs[0], v)
        out = out + c * v
    return out


@dataclass(frozen=True)
class ProductSpace:
    """Signature ``(dim H, (dim G_1, ..., dim G_m))`` of a product space."""

    head_dim: int
    block_dims: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.head_dim + sum(self.block_dims)

    def offsets(self) -> list[int]:
        out = [0, self.head_dim]
        for d in self.block_dims:
            out.append(out[-1] + d)
        return out

    def split(self, flat) -> "ProductVector":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.size,):
            raise DimensionError(f"expected flat vector of size {self.size}, got {flat.shape}")
        off = self.offsets()
        head = flat[off[0]:off[1]].copy()
        blocks = tuple(flat[off[i + 1]:off[i + 2]].copy() for i in range(len(self.block_dims)))
        return ProductVector(head, blocks)

    def zeros(self) -> "ProductVector":
        return ProductVector(np.zeros(self.head_dim), tuple(np.zeros(d) for d in self.block_dims))


@dataclass(frozen=True, eq=False)
class ProductVector:
    """Element ``(x, v_1, ..., v_m)`` of a product space."""

    head: np.ndarray
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", np.asarray(self.head, dtype=float))
        object.__setattr__(self, "blocks", tuple(np.asarray(b, dtype=float) for b in self.blocks))

    @property
    def space(self) -> ProductSpace:
        return ProductSpace(self.head.shape[0], tuple(b.shape[0] for b in self.blocks))

    def flatten(self) -> np.ndarray:
        return np.concatenate((self.head,) + self.blocks)

    def _check(self, other: "ProductVector") -> None:
        if self.space != other.space:
            raise DimensionError(f"signature mismatch: {self.space} vs {other.space}")

    def __add__(self, other: "ProductVector") -> "ProductVector":
        self._check(other)
        return ProductVector(self.head + other.head,
                             tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "ProductVector") -> "ProductVector":
        self._check(other)
        return ProductVector(self.head - other.head,
                             tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, c: float) -> "ProductVector":
        return ProductVector(c * self.head, tuple(c * b for b in self.blocks))

    __rmul__ = __mul__


def product_inner(u: ProductVector, w: ProductVector) -> float:
    """``<x, y>_H + sum_i <v_i, w_i>_{G_i}``."""
    u._check(w)
    total = inner(u.head, w.head)
    for a, b in zip(u.blocks, w.blocks):
        total += inner(a, b)
    return total


def product_norm(u: ProductVector) -> float:
    return math.sqrt(product_inner(u, u))

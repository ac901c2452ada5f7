"""Finite discrete distributions over non-negative integer time values.

A :class:`DiscreteDist` may be *partial*: its mass can be below one. This is
how the busy-period recursion carries its stable and unstable parts around.
Values are merged only on exact integer equality; probabilities are never
rounded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

TOL = 1e-9


class DistributionError(ValueError):
    pass


def _aggregate(values: np.ndarray, probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sort by value and sum the probabilities of duplicate values."""
    if values.size == 0:
        return values.astype(np.int64), probs.astype(np.float64)
    uniq, inverse = np.unique(values, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=probs.ravel(), minlength=uniq.size)
    keep = summed > 0
    return uniq[keep].astype(np.int64), summed[keep]


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Immutable distribution stored as parallel value/probability arrays.

    Build instances with :meth:`from_pairs` or :meth:`from_arrays`; the
    constructor assumes its arrays already satisfy the invariants when
    ``check=False``.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.int64)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if values.ndim != 1 or values.shape != probs.shape:
            raise DistributionError("values and probs must be 1-D arrays of equal length")
        if values.size:
            if values[0] < 0:
                raise DistributionError("time values must be non-negative")
            if np.any(np.diff(values) <= 0):
                raise DistributionError("values must be strictly ascending")
            if np.any(probs <= 0) or not np.all(np.isfinite(probs)):
                raise DistributionError("probabilities must be positive and finite")
            if probs.sum() > 1 + TOL:
                raise DistributionError(f"total mass {probs.sum()!r} exceeds 1")

    # construction -----------------------------------------------------------

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "DiscreteDist":
        """Build from ``(value, prob)`` pairs; duplicates are merged, zero probs dropped."""
        pairs = list(pairs)
        if not pairs:
            return cls.empty()
        arr = np.asarray(pairs, dtype=np.float64)
        values = arr[:, 0]
        if np.any(values != np.round(values)):
            raise DistributionError("time values must be integers")
        return cls.from_arrays(values.astype(np.int64), arr[:, 1])

    @classmethod
    def from_arrays(cls, values, probs) -> "DiscreteDist":
        values = np.asarray(values, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if np.any(probs < 0):
            raise DistributionError("probabilities must be non-negative")
        v, p = _aggregate(values, probs)
        return cls(v, p)

    @classmethod
    def point(cls, value: int, prob: float = 1.0) -> "DiscreteDist":
        return cls(np.array([value]), np.array([prob]))

    @classmethod
    def empty(cls) -> "DiscreteDist":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    # queries ----------------------------------------------------------------

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    def is_complete(self, tol: float = TOL) -> bool:
        return abs(self.mass - 1.0) <= tol

    def __len__(self) -> int:
        return int(self.values.size)

    def __iter__(self):
        return iter(zip(self.values.tolist(), self.probs.tolist()))

    def __repr__(self) -> str:
        body = ", ".join(f"{v}: {p:.6g}" for v, p in self)
        return f"DiscreteDist({{{body}}})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDist):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    def allclose(self, other: "DiscreteDist", atol: float = TOL) -> bool:
        """Equal supports and probabilities within ``atol``."""
        return np.array_equal(self.values, other.values) and np.allclose(
            self.probs, other.probs, rtol=0, atol=atol
        )

    @property
    def min(self) -> int:
        return int(self.values[0])

    @property
    def max(self) -> int:
        return int(self.values[-1])

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def pairs(self) -> list:
        return [[int(v), float(p)] for v, p in self]

    def to_json(self) -> str:
        return json.dumps(self.pairs())

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDist":
        return cls.from_pairs(json.loads(text))


def convolve(a: DiscreteDist, b: DiscreteDist) -> DiscreteDist:
    """Distribution of the sum of two independent variables."""
    if len(a) == 0 or len(b) == 0:
        return DiscreteDist.empty()
    if len(b) == 1:
        return DiscreteDist(a.values + b.values[0], a.probs * b.probs[0])
    if len(a) == 1:
        return DiscreteDist(b.values + a.values[0], b.probs * a.probs[0])
    values = np.add.outer(a.values, b.values)
    probs = np.multiply.outer(a.probs, b.probs)
    v, p = _aggregate(values, probs)
    return DiscreteDist(v, p)


def convolve_power(a: DiscreteDist, times: int) -> DiscreteDist:
    """``times``-fold self-convolution; ``times == 0`` gives the point mass at 0."""
    result = DiscreteDist.point(0)
    for _ in range(times):
        result = convolve(result, a)
    return result


def coalesce(a: DiscreteDist, b: DiscreteDist) -> DiscreteDist:
    """Union of two partial distributions, summing probabilities of equal values."""
    if a.mass + b.mass > 1 + TOL:
        raise DistributionError(
            f"coalesced mass {a.mass + b.mass!r} exceeds 1"
        )
    if len(b) == 0:
        return a
    if len(a) == 0:
        return b
    v, p = _aggregate(np.concatenate([a.values, b.values]), np.concatenate([a.probs, b.probs]))
    return DiscreteDist(v, p)


def split_at(d: DiscreteDist, t: int) -> Tuple[DiscreteDist, DiscreteDist]:
    """Split into ``(values <= t, values > t)``."""
    cut = int(np.searchsorted(d.values, t, side="right"))
    return (
        DiscreteDist(d.values[:cut], d.probs[:cut]),
        DiscreteDist(d.values[cut:], d.probs[cut:]),
    )


def _suffix_mass(d: DiscreteDist, cut: int) -> float:
    # one fixed right-to-left summation order keeps tails monotone in t
    if cut >= len(d):
        return 0.0
    return float(np.cumsum(d.probs[::-1])[len(d) - 1 - cut])


def tail_geq(d: DiscreteDist, t: int, residual: float = 0.0) -> float:
    """``P(X >= t)`` plus ``residual`` (mass known to lie above every truncation point)."""
    if residual < 0:
        raise DistributionError("residual must be non-negative")
    return _suffix_mass(d, int(np.searchsorted(d.values, t, side="left"))) + residual


def exceed_gt(d: DiscreteDist, t: int, residual: float = 0.0) -> float:
    """``P(X > t)`` plus ``residual``."""
    if residual < 0:
        raise DistributionError("residual must be non-negative")
    return _suffix_mass(d, int(np.searchsorted(d.values, t, side="right"))) + residual

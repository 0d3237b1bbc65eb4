"""Permutations of ``{0, ..., p-1}`` and shuffle groups.

A shuffle group is the full symmetric group on a subset of indices (the
*movable* indices); every other index is held fixed.  This covers the three
groups used in practice: identity only, all permutations, and all
permutations of a leading block.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

ENUMERATION_CAP = 8


class GroupError(ValueError):
    """Raised for invalid groups or operations a group cannot support."""


@dataclass(frozen=True)
class Permutation:
    """A bijection ``i -> mapping[i]`` on ``{0, ..., p-1}``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise GroupError(f"not a permutation: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, p: int) -> "Permutation":
        return cls(tuple(range(p)))

    @classmethod
    def transposition(cls, p: int, i: int, j: int) -> "Permutation":
        m = list(range(p))
        m[i], m[j] = m[j], m[i]
        return cls(tuple(m))

    def __len__(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.int64)

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.mapping))


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return ``a o b``, i.e. ``i -> a(b(i))``."""
    if len(a) != len(b):
        raise GroupError(f"length mismatch: {len(a)} != {len(b)}")
    return Permutation(tuple(a.mapping[j] for j in b.mapping))


def invert(perm: Permutation) -> Permutation:
    inv = [0] * len(perm)
    for i, j in enumerate(perm.mapping):
        inv[j] = i
    return Permutation(tuple(inv))


def apply(perm: Permutation, v: Sequence | np.ndarray) -> np.ndarray:
    """Permute a vector: ``result[i] = v[perm(i)]``."""
    v = np.asarray(v)
    if v.shape[0] != len(perm):
        raise GroupError(f"length mismatch: permutation of {len(perm)} applied to vector of {v.shape[0]}")
    return v[perm.as_array()]


@dataclass(frozen=True)
class ShuffleGroup:
    """All permutations of ``range(p)`` that fix every index outside ``movable``."""

    p: int
    movable: tuple[int, ...]

    def __post_init__(self):
        if self.p < 1:
            raise GroupError("p must be positive")
        movable = tuple(sorted({int(i) for i in self.movable}))
        if movable and (movable[0] < 0 or movable[-1] >= self.p):
            raise GroupError(f"movable indices {movable} out of range for p={self.p}")
        object.__setattr__(self, "movable", movable)

    @classmethod
    def full(cls, p: int) -> "ShuffleGroup":
        return cls(p, tuple(range(p)))

    @classmethod
    def trivial(cls, p: int) -> "ShuffleGroup":
        return cls(p, ())

    @classmethod
    def fixing(cls, p: int, fixed: Sequence[int]) -> "ShuffleGroup":
        fixed = set(int(i) for i in fixed)
        if any(i < 0 or i >= p for i in fixed):
            raise GroupError(f"fixed indices {sorted(fixed)} out of range for p={p}")
        return cls(p, tuple(i for i in range(p) if i not in fixed))

    @classmethod
    def parse(cls, descriptor: str, p: int) -> "ShuffleGroup":
        """Parse ``identity``, ``full`` or ``fix=<i,j,...>``."""
        d = descriptor.strip()
        if d == "identity":
            return cls.trivial(p)
        if d == "full":
            return cls.full(p)
        if d.startswith("fix="):
            body = d[len("fix="):].strip()
            try:
                fixed = [int(s) for s in body.split(",") if s.strip()]
            except ValueError:
                raise GroupError(f"bad group descriptor {descriptor!r}") from None
            return cls.fixing(p, fixed)
        raise GroupError(f"bad group descriptor {descriptor!r}; expected identity, full or fix=<indices>")

    def order(self) -> int:
        return math.factorial(len(self.movable))

    def contains(self, perm: Permutation) -> bool:
        if len(perm) != self.p:
            return False
        moving = set(self.movable)
        return all(perm(i) == i for i in range(self.p) if i not in moving)

    def enumerate(self, cap: int = ENUMERATION_CAP) -> Iterator[Permutation]:
        """Yield every element of the group once, identity first."""
        if len(self.movable) > cap:
            raise GroupError(f"|movable|={len(self.movable)} exceeds enumeration cap {cap}")
        base = list(range(self.p))
        for images in itertools.permutations(self.movable):
            m = base.copy()
            for src, dst in zip(self.movable, images):
                m[src] = dst
            yield Permutation(tuple(m))

    def as_array(self, cap: int = ENUMERATION_CAP) -> np.ndarray:
        """All group elements stacked as an ``(order, p)`` integer array."""
        return np.array([perm.mapping for perm in self.enumerate(cap)], dtype=np.int64).reshape(-1, self.p)

    def sample(self, rng: np.random.Generator) -> Permutation:
        """Uniform draw from the group by shuffling the movable images."""
        m = list(range(self.p))
        images = rng.permutation(np.asarray(self.movable, dtype=np.int64))
        for src, dst in zip(self.movable, images):
            m[src] = int(dst)
        return Permutation(tuple(m))


def propose_transposition(group: ShuffleGroup, rng: np.random.Generator) -> tuple[int, int]:
    """Uniformly random unordered pair of distinct movable indices."""
    i, j = draw_transpositions(group, rng, 1)
    return int(i[0]), int(j[0])


def draw_transpositions(group: ShuffleGroup, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`propose_transposition`; returns index arrays ``(i, j)``."""
    m = len(group.movable)
    if m < 2:
        raise GroupError("need at least two movable indices to propose a transposition")
    movable = np.asarray(group.movable, dtype=np.int64)
    a = rng.integers(0, m, size=size)
    b = rng.integers(0, m - 1, size=size)
    b = b + (b >= a)
    return movable[a], movable[b]

"""Finite topological spaces and the Heyting algebra of their opens.

Subsets of the point set are int bit masks over point indices; the point
order fixed at construction is the canonical order for all output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import SpaceMismatchError, TopologyError

# discrete spaces above this size never materialise their open lattice
_MAX_ENUMERATED_POINTS = 20


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _bits(mask: int) -> Iterator[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def canonical_key(mask: int) -> tuple[int, tuple[int, ...]]:
    """Sort key: cardinality first, then the ascending index tuple."""
    return (_popcount(mask), tuple(_bits(mask)))


class FiniteSpace:
    """A finite set of labelled points together with its open sets.

    Construction validates that the empty set and the whole space are open
    and that the family is closed under pairwise union and intersection; a
    violation raises :class:`TopologyError` carrying the offending pair.
    """

    __slots__ = ("points", "index", "full", "_opens", "_open_set", "_discrete", "_nbhd", "_array")

    def __init__(self, points: Sequence, opens: Iterable[int], *, validate: bool = True):
        self.points: tuple[str, ...] = tuple(str(p) for p in points)
        if len(set(self.points)) != len(self.points):
            raise TopologyError("duplicate point labels")
        self.index = {p: i for i, p in enumerate(self.points)}
        self.full = (1 << len(self.points)) - 1
        self._discrete = False
        self._array = None
        masks = set()
        for o in opens:
            m = int(o)
            if m & ~self.full or m < 0:
                raise TopologyError(f"open {m:#b} mentions points outside the space")
            masks.add(m)
        if validate:
            for required in (0, self.full):
                if required not in masks:
                    raise TopologyError("the empty set and the full point set must be open",
                                        witness=required)
            srt = sorted(masks)
            bad = None
            if len(self.points) <= _kernels.MAX_KERNEL_POINTS:
                hit = _kernels.closure_violation(np.array(srt, dtype=np.int64))
                bad = None if hit is None else (srt[hit[0]], srt[hit[1]])
            else:  # pragma: no cover - spaces this large are not used
                for a, b in itertools.combinations(srt, 2):
                    if (a | b) not in masks or (a & b) not in masks:
                        bad = (a, b)
                        break
            if bad is not None:
                raise TopologyError(
                    "opens not closed under union/intersection: "
                    f"{self.labels(bad[0])} and {self.labels(bad[1])}", witness=bad)
        self._opens = tuple(sorted(masks, key=canonical_key))
        self._open_set = frozenset(masks)
        self._nbhd = tuple(self._minimal_nbhd(i) for i in range(len(self.points)))

    @classmethod
    def discrete(cls, points: Sequence) -> "FiniteSpace":
        """Every subset open; the lattice is never enumerated eagerly."""
        self = cls.__new__(cls)
        self.points = tuple(str(p) for p in points)
        if len(set(self.points)) != len(self.points):
            raise TopologyError("duplicate point labels")
        self.index = {p: i for i, p in enumerate(self.points)}
        self.full = (1 << len(self.points)) - 1
        self._discrete = True
        self._opens = None
        self._open_set = None
        self._array = None
        self._nbhd = tuple(1 << i for i in range(len(self.points)))
        return self

    @classmethod
    def from_subsets(cls, points: Sequence, subsets: Iterable[Iterable]) -> "FiniteSpace":
        pts = tuple(str(p) for p in points)
        idx = {p: i for i, p in enumerate(pts)}
        masks = []
        for s in subsets:
            m = 0
            for p in s:
                try:
                    m |= 1 << idx[str(p)]
                except KeyError:
                    raise TopologyError(f"unknown point {p!r}") from None
            masks.append(m)
        return cls(pts, masks)

    def _minimal_nbhd(self, i: int) -> int:
        acc = self.full
        for o in self._opens:
            if o >> i & 1:
                acc &= o
        return acc

    # -- lattice access ----------------------------------------------------

    @property
    def is_discrete(self) -> bool:
        return self._discrete or len(self.open_masks) == 1 << len(self.points)

    @property
    def open_masks(self) -> tuple[int, ...]:
        """All opens in canonical order."""
        if self._opens is None:
            if len(self.points) > _MAX_ENUMERATED_POINTS:
                raise TopologyError(f"refusing to enumerate 2^{len(self.points)} opens")
            self._opens = tuple(sorted(range(self.full + 1), key=canonical_key))
        return self._opens

    def opens(self) -> list["OpenSet"]:
        return [OpenSet(self, m) for m in self.open_masks]

    def open_array(self) -> np.ndarray:
        if self._array is None:
            self._array = np.array(self.open_masks, dtype=np.int64)
        return self._array

    def is_open(self, mask: int) -> bool:
        if self._discrete:
            return 0 <= mask <= self.full
        return mask in self._open_set

    def nbhd_mask(self, i: int) -> int:
        return self._nbhd[i]

    def mask_of(self, s) -> int:
        """Accept an int mask, an :class:`OpenSet`, or an iterable of labels."""
        if isinstance(s, OpenSet):
            self._same(s.space)
            return s.mask
        if isinstance(s, (int, np.integer)):
            m = int(s)
            if m < 0 or m & ~self.full:
                raise TopologyError(f"mask {m} outside the space")
            return m
        m = 0
        for p in s:
            try:
                m |= 1 << self.index[str(p)]
            except KeyError:
                raise TopologyError(f"unknown point {p!r}") from None
        return m

    def labels(self, mask: int) -> list[str]:
        return [self.points[i] for i in _bits(mask)]

    def open(self, s) -> "OpenSet":
        m = self.mask_of(s)
        if not self.is_open(m):
            raise TopologyError(f"{self.labels(m)} is not open")
        return OpenSet(self, m)

    @property
    def empty(self) -> "OpenSet":
        return OpenSet(self, 0)

    @property
    def whole(self) -> "OpenSet":
        return OpenSet(self, self.full)

    def _same(self, other: "FiniteSpace") -> None:
        if other is not self and other != self:
            raise SpaceMismatchError("open sets belong to different spaces")

    # -- equality / serialisation -------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteSpace):
            return NotImplemented
        if other is self:
            return True
        if self.points != other.points:
            return False
        if self._discrete and other._discrete:
            return True
        return set(self.open_masks) == set(other.open_masks)

    def __hash__(self) -> int:
        return hash(self.points)

    def __repr__(self) -> str:
        n = "2^%d" % len(self.points) if self._opens is None else str(len(self._opens))
        return f"FiniteSpace(points={list(self.points)}, opens={n})"

    def to_json(self) -> dict:
        return {"points": list(self.points), "opens": [self.labels(m) for m in self.open_masks]}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteSpace":
        if data.get("discrete"):
            return cls.discrete(data["points"])
        return cls.from_subsets(data["points"], data["opens"])


@dataclass(frozen=True)
class OpenSet:
    space: FiniteSpace
    mask: int

    def __post_init__(self):
        if not self.space.is_open(self.mask):
            raise TopologyError(f"{self.space.labels(self.mask)} is not open")

    @property
    def points(self) -> list[str]:
        return self.space.labels(self.mask)

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return _popcount(self.mask)

    def __contains__(self, label) -> bool:
        i = self.space.index.get(str(label))
        return i is not None and bool(self.mask >> i & 1)

    def __and__(self, other: "OpenSet") -> "OpenSet":
        self.space._same(other.space)
        return OpenSet(self.space, self.mask & other.mask)

    def __or__(self, other: "OpenSet") -> "OpenSet":
        self.space._same(other.space)
        return OpenSet(self.space, self.mask | other.mask)

    def __le__(self, other: "OpenSet") -> bool:
        self.space._same(other.space)
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "OpenSet") -> bool:
        return self <= other and self.mask != other.mask

    def is_empty(self) -> bool:
        return self.mask == 0

    def complement_mask(self) -> int:
        return self.space.full & ~self.mask

    def __repr__(self) -> str:
        return "{" + ",".join(self.points) + "}"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def interior(space: FiniteSpace, s) -> OpenSet:
    """Largest open contained in the (arbitrary) subset ``s``."""
    m = space.mask_of(s)
    if space._discrete:
        return OpenSet(space, m)
    acc = 0
    for i in _bits(m):
        if space._nbhd[i] & ~m == 0:
            acc |= 1 << i
    return OpenSet(space, acc)


def heyting_impl(u: OpenSet, v: OpenSet) -> OpenSet:
    u.space._same(v.space)
    return interior(u.space, (u.space.full & ~u.mask) | v.mask)


def heyting_neg(u: OpenSet) -> OpenSet:
    return heyting_impl(u, u.space.empty)


def minimal_neighborhood(space: FiniteSpace, x) -> OpenSet:
    """Intersection of all opens containing the point labelled ``x``."""
    i = space.index.get(str(x))
    if i is None:
        raise TopologyError(f"unknown point {x!r}")
    return OpenSet(space, space._nbhd[i])


def lattice_atoms(space: FiniteSpace) -> list[OpenSet]:
    """Minimal nonempty opens in canonical order.

    Every atom is the minimal neighbourhood of each of its points, so only
    the ``n`` minimal neighbourhoods need inspecting.
    """
    nbhds = set(space._nbhd)
    atoms = [m for m in nbhds if not any(o != m and o & ~m == 0 for o in nbhds)]
    return [OpenSet(space, m) for m in sorted(atoms, key=canonical_key)]


def heyting_table(space: FiniteSpace) -> np.ndarray:
    """Implication table over ``space.open_masks`` computed by the kernel."""
    return _kernels.heyting_table(space.open_array(), space.full)


def adjunction_witness(space: FiniteSpace):
    """Opens ``(w, u, v)`` breaking the Heyting adjunction, or ``None``."""
    hit = _kernels.adjunction_violation(space.open_array(), space.full)
    if hit is None:
        return None
    opens = space.open_masks
    return tuple(OpenSet(space, opens[k]) for k in hit)


# ---------------------------------------------------------------------------
# stock spaces and generators
# ---------------------------------------------------------------------------


def sierpinski(points: Sequence = ("0", "1")) -> FiniteSpace:
    """Two points, opens ``{}, {second}, X``: the first point is non-isolated."""
    return FiniteSpace(points, [0, 0b10, 0b11])


def chain(points: Sequence) -> FiniteSpace:
    """Nested opens: each point's neighbourhood contains every later point."""
    n = len(points)
    return FiniteSpace(points, [((1 << n) - 1) & ~((1 << k) - 1) for k in range(n + 1)])


def indiscrete(points: Sequence) -> FiniteSpace:
    return FiniteSpace(points, [0, (1 << len(points)) - 1])


def all_topologies(n: int) -> Iterator[FiniteSpace]:
    """Every topology on ``n`` labelled points (1, 4, 29, 355 for n = 1..4)."""
    full = (1 << n) - 1
    middle = list(range(1, full))
    points = [str(i) for i in range(n)]
    for r in range(len(middle) + 1):
        for combo in itertools.combinations(middle, r):
            fam = set(combo) | {0, full}
            if all((a | b) in fam and (a & b) in fam for a, b in itertools.combinations(combo, 2)):
                yield FiniteSpace(points, fam, validate=False)


def topology_from_preorder(points: Sequence, leq: np.ndarray) -> FiniteSpace:
    """Alexandrov topology: opens are the up-closed sets of a preorder."""
    n = len(points)
    reach = np.array(leq, dtype=bool) | np.eye(n, dtype=bool)
    for k in range(n):
        reach |= reach[:, [k]] & reach[[k], :]
    up = [sum(1 << j for j in range(n) if reach[i, j]) for i in range(n)]
    return FiniteSpace(points, _close_under_union(up, n))


def _close_under_union(gens: Iterable[int], n: int) -> set[int]:
    fam = {0, (1 << n) - 1}
    frontier = set(gens)
    while frontier:
        fam |= frontier
        frontier = {a | b for a in fam for b in fam} - fam
    return fam


def random_topology(rng: np.random.Generator, n: int, density: float | None = None) -> FiniteSpace:
    """Random Alexandrov topology on ``n`` points from a random preorder."""
    p = rng.uniform(0.0, 0.2) if density is None else density
    rel = rng.random((n, n)) < p
    return topology_from_preorder([str(i) for i in range(n)], rel)

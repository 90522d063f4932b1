"""Bounded-rank variable sets over a finite space.

A variable set over an open ``U`` assigns to each nonempty open ``W`` inside
``U`` a finite set of lower-rank variable sets over ``W``. Missing keys in the
graph mean "no members there". Equality is literal: same space, same domain,
same graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from . import formula as F
from .checks import Check, Report
from .errors import RankError, SectionDomainError, UnknownDomainError, UnboundVariableError
from .forcing import Structure, truth_value
from .topology import FiniteSpace, OpenSet, canonical_key

DEFAULT_RANK_BOUND = 3


@dataclass(frozen=True, eq=False)
class VariableSet:
    space: FiniteSpace
    domain: int
    graph: Mapping[int, frozenset]
    rank: int = field(init=False)
    _hash: int = field(init=False, repr=False)

    def __post_init__(self):
        g = {int(w): frozenset(ms) for w, ms in self.graph.items() if ms}
        for w in g:
            if not w or w & ~self.domain:
                raise SectionDomainError(f"graph key {self.space.labels(w)} is not a nonempty subset of the domain")
        g = dict(sorted(g.items(), key=lambda kv: canonical_key(kv[0])))
        object.__setattr__(self, "graph", g)
        rank = 0
        for ms in g.values():
            for m in ms:
                rank = max(rank, m.rank + 1)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "_hash", hash((self.domain, frozenset(g.items()))))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, VariableSet) or self._hash != other._hash:
            return False
        return self.domain == other.domain and self.graph == other.graph and self.space == other.space

    def members(self, w) -> frozenset:
        return self.graph.get(self.space.mask_of(w), frozenset())

    def __repr__(self) -> str:
        return f"VariableSet(rank={self.rank}, domain={self.space.labels(self.domain)})"


def restrict(v: VariableSet, w) -> VariableSet:
    """Keep only the graph below ``w``."""
    m = v.space.mask_of(w)
    if m & ~v.domain:
        raise SectionDomainError(f"{v.space.labels(m)} is not inside the domain {v.space.labels(v.domain)}")
    if m == v.domain:
        return v
    return VariableSet(v.space, m, {k: s for k, s in v.graph.items() if not k & ~m})


def _sub_opens(space: FiniteSpace, u: int) -> list[int]:
    return [w for w in space.open_masks if w and not w & ~u]


def empty_set(space: FiniteSpace, u=None) -> VariableSet:
    return VariableSet(space, space.full if u is None else space.mask_of(u), {})


# ---------------------------------------------------------------------------
# hereditarily finite sets and the constant embedding
# ---------------------------------------------------------------------------


def hf_rank(a: frozenset) -> int:
    return 0 if not a else 1 + max(hf_rank(b) for b in a)


def hf_sets(max_rank: int) -> list[frozenset]:
    """All hereditarily finite sets of rank at most ``max_rank``."""
    level: list[frozenset] = [frozenset()]
    for _ in range(max_rank):
        level = [frozenset(c) for r in range(len(level) + 1) for c in itertools.combinations(level, r)]
    return sorted(level, key=lambda a: (hf_rank(a), len(a), hf_text(a)))


def hf_text(a: frozenset) -> str:
    return "{" + ",".join(sorted(hf_text(b) for b in a)) + "}"


def hat_embed(a: frozenset, u, space: FiniteSpace | None = None, *,
              rank_bound: int = DEFAULT_RANK_BOUND) -> VariableSet:
    """Constant embedding of a hereditarily finite set over the open ``u``.

    ``u`` may be an :class:`OpenSet`, in which case ``space`` is implied.
    """
    if isinstance(u, OpenSet):
        space, mask = u.space, u.mask
    else:
        if space is None:
            raise TypeError("space is required when u is not an OpenSet")
        mask = space.mask_of(u)
    a = _freeze(a)
    if hf_rank(a) > rank_bound:
        raise RankError(f"rank {hf_rank(a)} exceeds bound {rank_bound}")
    return _hat(space, a, mask)


@lru_cache(maxsize=None)
def _hat(space: FiniteSpace, a: frozenset, u: int) -> VariableSet:
    graph = {w: frozenset(_hat(space, b, w) for b in a) for w in _sub_opens(space, u)} if a else {}
    return VariableSet(space, u, graph)


def _freeze(a) -> frozenset:
    return frozenset(_freeze(b) for b in a)


def hereditary_members(vs: Iterable[VariableSet]) -> tuple[VariableSet, ...]:
    """Every variable set reachable through graphs, in first-seen order."""
    seen: dict[VariableSet, None] = {}
    stack = list(vs)[::-1]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen[v] = None
        for w, ms in v.graph.items():
            stack.extend(sorted(ms, key=_order_key, reverse=True))
    return tuple(seen)


def _order_key(v: VariableSet):
    return (canonical_key(v.domain), v.rank, len(v.graph), v._hash)


# ---------------------------------------------------------------------------
# the three conditions
# ---------------------------------------------------------------------------


def member_forced(f: VariableSet, g: VariableSet, u) -> bool:
    """Whether ``f`` is forced to be a member of ``g`` on ``u``."""
    sp = g.space
    m = sp.mask_of(u)
    if m & ~f.domain or m & ~g.domain:
        raise SectionDomainError(f"both sets must be defined on {sp.labels(m)}")
    if not m:
        return True
    return restrict(f, m) in g.graph.get(m, frozenset())


def _covers(space: FiniteSpace, w: int):
    below = [v for v in _sub_opens(space, w) if v != w]
    for r in range(2, len(below) + 1):
        for combo in itertools.combinations(below, r):
            acc = 0
            for v in combo:
                acc |= v
            if acc != w:
                continue
            redundant = False
            for k in range(len(combo)):
                rest = 0
                for j, v in enumerate(combo):
                    if j != k:
                        rest |= v
                if rest == w:
                    redundant = True
                    break
            if not redundant:
                yield combo


def validate(v: VariableSet, *, rank_bound: int = DEFAULT_RANK_BOUND) -> Report:
    """Check the three defining conditions, hereditarily.

    1. members over ``W`` are variable sets over ``W`` of lower rank (and are
       themselves valid);
    2. restricting a member over ``W`` to ``V`` gives a member over ``V``;
    3. every compatible family over an irredundant cover of ``W`` glues to
       exactly one member over ``W``.
    """
    checks = [_condition1(v, rank_bound), _condition2(v), _condition3(v)]
    return Report(tuple(checks))


def _condition1(v: VariableSet, rank_bound: int) -> Check:
    if v.rank > rank_bound:
        return Check("condition1", False, witness={"rank": v.rank}, detail=f"rank exceeds {rank_bound}")
    for m in hereditary_members([v]):
        for w, ms in m.graph.items():
            for g in ms:
                if g.domain != w or g.rank >= m.rank or g.space != m.space:
                    return Check("condition1", False, witness={"open": v.space.labels(w)},
                                 detail="member over the wrong open or of too high rank")
    return Check("condition1", True)


def _condition2(v: VariableSet) -> Check:
    sp = v.space
    for m in hereditary_members([v]):
        subs = _sub_opens(sp, m.domain)
        for w in subs:
            for g in m.graph.get(w, ()):
                for u in subs:
                    if u != w and not u & ~w and restrict(g, u) not in m.graph.get(u, ()):
                        return Check("condition2", False,
                                     witness={"open": sp.labels(w), "to": sp.labels(u), "member_rank": g.rank},
                                     detail="restriction of a member is not a member")
    return Check("condition2", True)


def _condition3(v: VariableSet) -> Check:
    sp = v.space
    for m in hereditary_members([v]):
        for w in _sub_opens(sp, m.domain):
            members = m.graph.get(w, frozenset())
            for cover in _covers(sp, w):
                pools = [sorted(m.graph.get(c, ()), key=_order_key) for c in cover]
                for fam in itertools.product(*pools):
                    if not _compatible(cover, fam):
                        continue
                    glued = [g for g in members if all(restrict(g, c) == x for c, x in zip(cover, fam))]
                    if len(glued) != 1:
                        return Check("condition3", False, witness={
                            "open": sp.labels(w), "cover": [sp.labels(c) for c in cover],
                            "gluings": len(glued)},
                            detail="no gluing" if not glued else "gluing not unique")
    return Check("condition3", True)


def _compatible(cover, fam) -> bool:
    for (a, x), (b, y) in itertools.combinations(zip(cover, fam), 2):
        i = a & b
        if i and restrict(x, i) != restrict(y, i):
            return False
    return True


# ---------------------------------------------------------------------------
# forcing over variable sets
# ---------------------------------------------------------------------------


class VSetStructure(Structure):
    """Variable sets as a forcing structure: ``=`` and ``in`` atoms."""

    def __init__(self, space: FiniteSpace, families: Mapping[str, Sequence[VariableSet]] | None = None,
                 constants: Mapping[str, VariableSet] | None = None):
        self.space = space
        self.families = {k: tuple(v) for k, v in (families or {}).items()}
        self.constants = dict(constants or {})

    def domain_of(self, v: VariableSet) -> int:
        return v.domain

    def restrict(self, v: VariableSet, mask: int) -> VariableSet:
        return restrict(v, mask)

    def constant(self, name: str) -> VariableSet:
        try:
            return self.constants[name]
        except KeyError:
            raise UnboundVariableError(f"unknown constant {name!r}") from None

    def family(self, name: str):
        try:
            return self.families[name]
        except KeyError:
            raise UnknownDomainError(f"unknown domain {name!r}") from None

    def holds(self, atom, args, nbhd) -> bool:
        if isinstance(atom, F.In):
            return member_forced(args[0], args[1], nbhd)
        return super().holds(atom, args, nbhd)


def comprehend(z: VariableSet, phi: F.Formula, var: str = "x", *,
               families: Mapping[str, Sequence[VariableSet]] | None = None,
               env: Mapping[str, VariableSet] | None = None,
               constants: Mapping[str, VariableSet] | None = None) -> VariableSet:
    """Subset of ``z`` cut out by ``phi``: keep ``x`` over ``W`` iff ``phi[x]`` is forced on all of ``W``."""
    sp = z.space
    st = VSetStructure(sp, families, constants)
    env = dict(env or {})
    graph = {}
    for w, ms in z.graph.items():
        local = {k: restrict(s, w) for k, s in env.items()}
        graph[w] = frozenset(x for x in ms if truth_value(st, phi, {**local, var: x}, w).mask == w)
    return VariableSet(sp, z.domain, graph)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_json(v: VariableSet) -> dict:
    sp = v.space
    return {
        "domain": sp.labels(v.domain),
        "graph": [{"open": sp.labels(w), "members": sorted((to_json(m) for m in ms), key=repr)}
                  for w, ms in v.graph.items()],
    }


def from_json(space: FiniteSpace, data: dict) -> VariableSet:
    graph = {space.mask_of(e["open"]): frozenset(from_json(space, m) for m in e["members"])
             for e in data.get("graph", [])}
    return VariableSet(space, space.mask_of(data["domain"]), graph)

"""Presheaves of finite structures and the Kripke-Joyal forcing evaluator.

Forcing at a point depends only on the restrictions of the sections involved
to that point's minimal neighbourhood, so every clause reduces to set algebra
over bit masks plus interiors:

* atoms hold at ``x`` when they hold for the restrictions to ``N(x)``;
* conjunction and disjunction are pointwise;
* negation and implication take the interior of the failure set;
* ``forall`` fails at ``x`` when some point of ``N(x)`` has a domain section
  violating the body; ``exists`` is the union of the witnesses' truth sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from . import formula as F
from .checks import Check
from .errors import (
    PresheafError,
    SectionDomainError,
    UnboundVariableError,
    UnevaluableAtomError,
    UnknownDomainError,
)
from .topology import FiniteSpace, OpenSet, _bits, interior


class Structure:
    """What the evaluator needs from a model over a finite space.

    Subclasses supply ``space``, :meth:`domain_of` and :meth:`restrict`; atom
    kinds other than equality are opt-in.
    """

    space: FiniteSpace

    def domain_of(self, section) -> int:
        raise NotImplementedError

    def restrict(self, section, mask: int):
        raise NotImplementedError

    def constant(self, name: str):
        raise UnboundVariableError(f"unknown constant {name!r}")

    def rational(self, value: Fraction):
        raise UnevaluableAtomError("rational literals need a structure of internal reals")

    def family(self, name: str) -> Sequence:
        raise UnknownDomainError(f"unknown domain {name!r}")

    def holds(self, atom: F.Atom, args: tuple, nbhd: int) -> bool:
        """Truth of ``atom`` for ``args`` on the minimal neighbourhood ``nbhd``."""
        if isinstance(atom, F.Eq):
            a, b = args
            return self.restrict(a, nbhd) == self.restrict(b, nbhd)
        kind = type(atom).__name__.lower()
        raise UnevaluableAtomError(f"{kind!r} atoms are not interpreted by {type(self).__name__}")


# ---------------------------------------------------------------------------
# presheaves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Section:
    domain: int
    ident: Hashable

    def __repr__(self) -> str:
        return f"Section({self.ident!r}@{self.domain:#b})"


AtomHook = Callable[["Presheaf", tuple, int], bool]


@dataclass
class Presheaf(Structure):
    """Finite sections per open, restriction maps, relations and constants.

    ``sections[U]`` lists the identifiers over open mask ``U``;
    ``restrictions[(U, V)]`` maps identifiers over ``U`` to identifiers over
    ``V`` for every pair of opens ``V`` strictly inside ``U``;
    ``relations[(name, U)]`` holds tuples of identifiers over ``U``.
    ``domains`` declares the finite quantifier families. ``hooks`` may
    interpret ``"in"`` and ``"leq"`` atoms.
    """

    space: FiniteSpace
    sections: dict[int, tuple]
    restrictions: dict[tuple[int, int], dict]
    relations: dict[tuple[str, int], frozenset] = field(default_factory=dict)
    constants: dict[str, Section] = field(default_factory=dict)
    domains: dict[str, tuple[Section, ...]] = field(default_factory=dict)
    hooks: dict[str, AtomHook] = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self):
        self.sections = {int(u): tuple(ids) for u, ids in self.sections.items()}
        for u in self.space.open_masks:
            self.sections.setdefault(u, ())
        self.relations = {k: frozenset(tuple(t) for t in v) for k, v in self.relations.items()}
        self.domains = {k: tuple(v) for k, v in self.domains.items()}
        if self.validate:
            self._check_laws()

    # -- Structure protocol ----------------------------------------------------

    def domain_of(self, section: Section) -> int:
        return section.domain

    def restrict(self, section: Section, mask: int) -> Section:
        if mask == section.domain:
            return section
        if mask & ~section.domain:
            raise SectionDomainError(f"cannot restrict {section!r} to a larger open")
        try:
            return Section(mask, self.restrictions[(section.domain, mask)][section.ident])
        except KeyError:
            raise PresheafError(f"no restriction of {section!r} to {self.space.labels(mask)}") from None

    def constant(self, name: str) -> Section:
        try:
            return self.constants[name]
        except KeyError:
            raise UnboundVariableError(f"unknown constant {name!r}") from None

    def family(self, name: str) -> Sequence[Section]:
        try:
            return self.domains[name]
        except KeyError:
            raise UnknownDomainError(f"unknown domain {name!r}") from None

    def holds(self, atom, args, nbhd) -> bool:
        if isinstance(atom, F.Rel):
            ids = tuple(self.restrict(a, nbhd).ident for a in args)
            return ids in self.relations.get((atom.name, nbhd), frozenset())
        if isinstance(atom, (F.In, F.Leq)):
            key = "in" if isinstance(atom, F.In) else "leq"
            hook = self.hooks.get(key)
            if hook is None:
                raise UnevaluableAtomError(f"no hook registered for {key!r} atoms")
            return hook(self, args, nbhd)
        return super().holds(atom, args, nbhd)

    def rational(self, value: Fraction):
        hook = self.hooks.get("rational")
        if hook is None:
            raise UnevaluableAtomError("rational literals need a registered 'rational' hook")
        return hook(self, value)

    # -- accessors ---------------------------------------------------------------

    def section(self, ident: Hashable, over=None) -> Section:
        """The section named ``ident`` over ``over`` (defaults to the whole space)."""
        u = self.space.full if over is None else self.space.mask_of(over)
        if ident not in self.sections.get(u, ()):
            raise PresheafError(f"no section {ident!r} over {self.space.labels(u)}")
        return Section(u, ident)

    def sections_over(self, u: int) -> list[Section]:
        return [Section(u, i) for i in self.sections.get(u, ())]

    def all_sections(self) -> list[Section]:
        return [s for u in self.space.open_masks for s in self.sections_over(u)]

    # -- presheaf laws ------------------------------------------------------------

    def _check_laws(self) -> None:
        opens = self.space.open_masks
        for u, ids in self.sections.items():
            if not self.space.is_open(u):
                raise PresheafError(f"sections declared over non-open {self.space.labels(u)}")
        # the empty open is never evaluated on, so restrictions to it are optional
        opens = [o for o in opens if o]
        for u in opens:
            for v in opens:
                if v == u or v & ~u:
                    continue
                table = self.restrictions.get((u, v))
                if table is None:
                    if self.sections[u]:
                        raise PresheafError(
                            f"missing restriction {self.space.labels(u)} -> {self.space.labels(v)}")
                    continue
                for s in self.sections[u]:
                    if table.get(s) not in self.sections[v]:
                        raise PresheafError(f"restriction of {s!r} to {self.space.labels(v)} is not a section")
        for u in opens:
            for v in opens:
                if v == u or v & ~u:
                    continue
                for w in opens:
                    if w == v or w & ~v:
                        continue
                    for s in self.sections[u]:
                        via = self.restrictions[(v, w)][self.restrictions[(u, v)][s]]
                        direct = self.restrictions[(u, w)][s]
                        if via != direct:
                            raise PresheafError(
                                f"restrictions do not compose for {s!r}: "
                                f"{self.space.labels(u)} > {self.space.labels(v)} > {self.space.labels(w)}")
        for (name, u), tuples in self.relations.items():
            for t in tuples:
                if any(s not in self.sections[u] for s in t):
                    raise PresheafError(f"relation {name} over {self.space.labels(u)} mentions unknown sections")
                for v in opens:
                    if v == u or v & ~u:
                        continue
                    img = tuple(self.restrictions[(u, v)][s] for s in t)
                    if img not in self.relations.get((name, v), frozenset()):
                        raise PresheafError(f"relation {name} not preserved by restriction to {self.space.labels(v)}")
        for name, s in self.constants.items():
            if s.domain != self.space.full or s.ident not in self.sections[s.domain]:
                raise PresheafError(f"constant {name!r} must be a global section")
        for name, fam in self.domains.items():
            for s in fam:
                if s.ident not in self.sections.get(s.domain, ()):
                    raise PresheafError(f"domain {name!r} lists unknown section {s!r}")

    # -- construction ------------------------------------------------------------

    @classmethod
    def from_stalks(cls, space: FiniteSpace, stalks: Mapping[str, Sequence],
                    maps: Mapping[tuple[str, str], Mapping] | None = None,
                    relations: Mapping[str, Mapping[str, Iterable[tuple]]] | None = None,
                    constants: Mapping[str, Mapping[str, Hashable]] | None = None,
                    domains: Mapping[str, Sequence[tuple[Iterable, Mapping[str, Hashable]]]] | None = None,
                    hooks: Mapping[str, AtomHook] | None = None) -> "Presheaf":
        """Section presheaf of a sheaf given by germs.

        ``stalks[x]`` lists the germs at point ``x``; ``maps[(x, y)]`` sends
        germs at ``x`` to germs at ``y`` for ``y`` in the minimal
        neighbourhood of ``x`` (identity when omitted and the stalks agree).
        A section over ``U`` is a compatible choice of germs, identified by
        the tuple ``((x, germ), ...)`` in point order. ``relations[R][x]``
        lists germ tuples related at ``x``; a relation holds over ``U`` when
        it holds at every point. Constants and domain members are given as
        ``{point: germ}`` choices.
        """
        maps = dict(maps or {})
        pts = space.points
        n = len(pts)

        def germ_map(x: int, y: int):
            if x == y:
                return lambda g: g
            key = (pts[x], pts[y])
            if key in maps:
                table = maps[key]
                return lambda g: table[g]
            if set(stalks[pts[x]]) <= set(stalks[pts[y]]):
                return lambda g: g
            raise PresheafError(f"missing germ map {key}")

        gm = {(x, y): germ_map(x, y) for x in range(n) for y in _bits(space.nbhd_mask(x))}
        sections: dict[int, tuple] = {}
        for u in space.open_masks:
            idx = list(_bits(u))
            out = []
            for choice in itertools.product(*(stalks[pts[i]] for i in idx)):
                g = dict(zip(idx, choice))
                if all(gm[(x, y)](g[x]) == g[y] for x in idx for y in _bits(space.nbhd_mask(x))):
                    out.append(tuple((pts[i], g[i]) for i in idx))
            sections[u] = tuple(out)
        restrictions = {}
        for u in space.open_masks:
            for v in space.open_masks:
                if v != u and not v & ~u:
                    keep = set(space.labels(v))
                    restrictions[(u, v)] = {s: tuple(p for p in s if p[0] in keep) for s in sections[u]}
        rels = {}
        for name, per_point in (relations or {}).items():
            for u in space.open_masks:
                rels[(name, u)] = frozenset(
                    t for t in itertools.product(sections[u], repeat=_arity(per_point))
                    if all(tuple(dict(s)[pts[i]] for s in t) in set(map(tuple, per_point.get(pts[i], ())))
                           for i in _bits(u))
                ) if _arity(per_point) else frozenset()

        def as_section(choice: Mapping[str, Hashable], over=None) -> Section:
            u = space.full if over is None else space.mask_of(over)
            ident = tuple((p, choice[p]) for p in space.labels(u))
            if ident not in sections[u]:
                raise PresheafError(f"germ choice {dict(choice)} is not a continuous section")
            return Section(u, ident)

        consts = {k: as_section(v) for k, v in (constants or {}).items()}
        doms = {k: tuple(as_section(c, over) for over, c in fam) for k, fam in (domains or {}).items()}
        return cls(space, sections, restrictions, rels, consts, doms, dict(hooks or {}))

    # -- JSON -------------------------------------------------------------------

    def to_json(self) -> dict:
        sp = self.space
        return {
            "space": sp.to_json(),
            "sections": [{"open": sp.labels(u), "ids": [_ident_str(i) for i in self.sections[u]]}
                         for u in sp.open_masks],
            "restrict": [{"from": sp.labels(u), "to": sp.labels(v),
                          "map": {_ident_str(a): _ident_str(b) for a, b in t.items()}}
                         for (u, v), t in sorted(self.restrictions.items())],
            "relations": [{"name": name, "open": sp.labels(u),
                           "tuples": sorted([_ident_str(s) for s in t] for t in ts)}
                          for (name, u), ts in sorted(self.relations.items()) if ts],
            "constants": {k: _ident_str(s.ident) for k, s in sorted(self.constants.items())},
            "domains": {k: [{"open": sp.labels(s.domain), "id": _ident_str(s.ident)} for s in fam]
                        for k, fam in sorted(self.domains.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Presheaf":
        sp = FiniteSpace.from_json(data["space"])
        sections = {sp.mask_of(e["open"]): tuple(e["ids"]) for e in data.get("sections", [])}
        restrictions = {(sp.mask_of(e["from"]), sp.mask_of(e["to"])): dict(e["map"])
                        for e in data.get("restrict", [])}
        relations: dict = {}
        for e in data.get("relations", []):
            relations[(e["name"], sp.mask_of(e["open"]))] = frozenset(tuple(t) for t in e["tuples"])
        constants = {k: Section(sp.full, v) for k, v in data.get("constants", {}).items()}
        domains = {k: tuple(Section(sp.mask_of(m["open"]), m["id"]) for m in fam)
                   for k, fam in data.get("domains", {}).items()}
        return cls(sp, sections, restrictions, relations, constants, domains)


def _arity(per_point: Mapping[str, Iterable[tuple]]) -> int:
    for tuples in per_point.values():
        for t in tuples:
            return len(t)
    return 0


def _ident_str(ident) -> str:
    if isinstance(ident, tuple) and all(isinstance(p, tuple) and len(p) == 2 for p in ident):
        return "|".join(f"{x}={g}" for x, g in ident)
    return str(ident)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _term(p: Structure, t: F.Term, env: Mapping):
    if isinstance(t, F.Var):
        try:
            return env[t.name]
        except KeyError:
            raise UnboundVariableError(f"variable {t.name!r} has no section in the environment") from None
    if isinstance(t, F.Const):
        return p.constant(t.name)
    return p.rational(t.value)


def _interior_in(space: FiniteSpace, s: int, d: int) -> int:
    return interior(space, s & d).mask


def _eval(p: Structure, f: F.Formula, env: Mapping, d: int) -> int:
    """Mask of points of the open ``d`` forcing ``f``."""
    sp = p.space
    if d == 0:
        return 0
    if isinstance(f, F.ATOMS):
        terms = (f.left, f.right) if not isinstance(f, F.Rel) else f.args
        args = tuple(_term(p, t, env) for t in terms)
        for a in args:
            if d & ~p.domain_of(a):
                raise SectionDomainError(f"section {a!r} is not defined on {sp.labels(d)}")
        out = 0
        for i in _bits(d):
            n = sp.nbhd_mask(i)
            if p.holds(f, args, n):
                out |= 1 << i
        return out
    if isinstance(f, F.And):
        left = _eval(p, f.left, env, d)
        return left & _eval(p, f.right, env, d)
    if isinstance(f, F.Or):
        return _eval(p, f.left, env, d) | _eval(p, f.right, env, d)
    if isinstance(f, F.Not):
        return _interior_in(sp, ~_eval(p, f.body, env, d), d)
    if isinstance(f, F.Implies):
        ok = ~_eval(p, f.left, env, d) | _eval(p, f.right, env, d)
        return _interior_in(sp, ok, d)
    fam = p.family(f.domain)
    if isinstance(f, F.Exists):
        out = 0
        for s in fam:
            dd = d & p.domain_of(s)
            if dd:
                out |= _eval(p, f.body, {**env, f.var: s}, dd)
        return out
    bad = 0
    for s in fam:
        dd = d & p.domain_of(s)
        if dd:
            bad |= dd & ~_eval(p, f.body, {**env, f.var: s}, dd)
    return _interior_in(sp, ~bad, d)


def truth_value(p: Structure, f: F.Formula, env: Mapping | None = None, u=None) -> OpenSet:
    """Open set of points of ``u`` (default: everywhere) forcing ``f``."""
    env = dict(env or {})
    sp = p.space
    d = sp.full if u is None else sp.mask_of(u)
    if not sp.is_open(d):
        raise SectionDomainError(f"{sp.labels(d)} is not open")
    missing = F.free_vars(f) - env.keys()
    if missing:
        raise UnboundVariableError(f"free variables without sections: {sorted(missing)}")
    for name, s in env.items():
        if d & ~p.domain_of(s):
            raise SectionDomainError(f"section for {name!r} is not defined on {sp.labels(d)}")
    return OpenSet(sp, _eval(p, f, env, d))


def forces(p: Structure, f: F.Formula, env: Mapping | None = None, u=None) -> bool:
    """Whether ``f`` is forced on the whole open ``u``."""
    sp = p.space
    d = sp.full if u is None else sp.mask_of(u)
    return truth_value(p, f, env, d).mask == d


def forces_at(p: Structure, f: F.Formula, env: Mapping | None, x) -> bool:
    sp = p.space
    i = sp.index.get(str(x))
    if i is None:
        raise SectionDomainError(f"unknown point {x!r}")
    n = sp.nbhd_mask(i)
    return bool(truth_value(p, f, env, n).mask >> i & 1)


# ---------------------------------------------------------------------------
# exactness
# ---------------------------------------------------------------------------


def _covers(space: FiniteSpace, u: int, limit: int):
    below = [v for v in space.open_masks if v and v != u and not v & ~u]
    if len(below) > limit:
        raise PresheafError(f"{len(below)} sub-opens below {space.labels(u)}; too many covers to enumerate")
    for r in range(1, len(below) + 1):
        for combo in itertools.combinations(below, r):
            acc = 0
            for v in combo:
                acc |= v
            if acc == u and not any(
                    all_other_union(combo, k) == u for k in range(len(combo))):
                yield combo


def all_other_union(combo, skip: int) -> int:
    acc = 0
    for k, v in enumerate(combo):
        if k != skip:
            acc |= v
    return acc


def is_exact(p: Presheaf, *, max_sub_opens: int = 16) -> Check:
    """Check unique gluing of compatible families over every open cover.

    Only irredundant covers by proper sub-opens are enumerated; adding
    members to a cover cannot create new compatible families that fail. The
    relation clause is checked too: a tuple whose restrictions lie in the
    relation on every cover member lies in the relation on the union.
    The empty open is skipped.
    """
    sp = p.space
    for u in sp.open_masks:
        if u == 0:
            continue
        for cover in _covers(sp, u, max_sub_opens):
            fams = [p.sections[v] for v in cover]
            gluings: dict[tuple, list] = {}
            for s in p.sections[u]:
                key = tuple(p.restrictions[(u, v)][s] for v in cover)
                gluings.setdefault(key, []).append(s)
            for fam in itertools.product(*fams):
                if not _compatible(p, cover, fam):
                    continue
                found = gluings.get(tuple(fam), [])
                if len(found) != 1:
                    return Check("exact", False, witness={
                        "open": sp.labels(u),
                        "cover": [sp.labels(v) for v in cover],
                        "family": [_ident_str(s) for s in fam],
                        "gluings": [_ident_str(s) for s in found],
                    }, detail="no gluing" if not found else "gluing not unique")
            for name in {k[0] for k in p.relations}:
                arity = _rel_arity(p, name)
                if not arity:
                    continue
                for t in itertools.product(p.sections[u], repeat=arity):
                    if t in p.relations.get((name, u), frozenset()):
                        continue
                    if all(tuple(p.restrictions[(u, v)][s] for s in t) in p.relations.get((name, v), frozenset())
                           for v in cover):
                        return Check("exact", False, witness={
                            "open": sp.labels(u), "cover": [sp.labels(v) for v in cover],
                            "relation": name, "tuple": [_ident_str(s) for s in t],
                        }, detail="relation does not glue")
    return Check("exact", True)


def _rel_arity(p: Presheaf, name: str) -> int:
    for (n, _), ts in p.relations.items():
        if n == name:
            for t in ts:
                return len(t)
    return 0


def _compatible(p: Presheaf, cover, fam) -> bool:
    for (i, vi), (j, vj) in itertools.combinations(enumerate(cover), 2):
        w = vi & vj
        if not w:
            continue
        a = fam[i] if w == vi else p.restrictions[(vi, w)][fam[i]]
        b = fam[j] if w == vj else p.restrictions[(vj, w)][fam[j]]
        if a != b:
            return False
    return True

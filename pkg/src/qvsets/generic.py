"""Filters of opens, genericity, and collapse to classical structures.

On a finite space every filter of opens is principal: it consists of the
opens containing the intersection of its members. A filter is maximal
exactly when that intersection is a minimal nonempty open.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import formula as F
from .checks import Check, Report
from .errors import FilterError, InvariantError, SectionDomainError
from .forcing import Presheaf, Structure, truth_value
from .quantum import HermitianOperator, QuantumContext, character_eval, projection_of
from .topology import FiniteSpace, OpenSet, canonical_key, lattice_atoms
from .vset import VSetStructure, hereditary_members


@dataclass(frozen=True)
class OpenFilter:
    space: FiniteSpace
    members: frozenset[int]

    def __post_init__(self):
        ms = frozenset(int(m) for m in self.members)
        object.__setattr__(self, "members", ms)
        sp = self.space
        if sp.full not in ms:
            raise FilterError("a filter must contain the whole space")
        for m in ms:
            if not sp.is_open(m):
                raise FilterError(f"{sp.labels(m)} is not open")
        for a, b in itertools.combinations(ms, 2):
            if a & b not in ms:
                raise FilterError(f"not closed under intersection: {sp.labels(a)} and {sp.labels(b)}")
        for m in ms:
            for o in sp.open_masks:
                if not m & ~o and o not in ms:
                    raise FilterError(f"not upward closed: {sp.labels(o)} contains {sp.labels(m)}")

    @property
    def generator(self) -> int:
        g = self.space.full
        for m in self.members:
            g &= m
        return g

    @property
    def is_proper(self) -> bool:
        return 0 not in self.members

    def opens(self) -> list[OpenSet]:
        return [OpenSet(self.space, m) for m in sorted(self.members, key=canonical_key)]

    def __contains__(self, u) -> bool:
        return self.space.mask_of(u) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return f"OpenFilter(generated by {{{','.join(self.space.labels(self.generator))}}})"


def principal_filter(space: FiniteSpace, u) -> OpenFilter:
    g = space.mask_of(u)
    if not space.is_open(g):
        raise FilterError(f"{space.labels(g)} is not open")
    return OpenFilter(space, frozenset(o for o in space.open_masks if not g & ~o))


def is_maximal(f: OpenFilter) -> bool:
    """Maximality among proper filters, computed two ways and cross-checked.

    Directly: ``f`` is proper and every open meeting its generator is already
    a member (otherwise adding it gives a larger proper filter). Structurally:
    the generator is a lattice atom.
    """
    sp = f.space
    g = f.generator
    direct = f.is_proper and all(o in f.members for o in sp.open_masks if o & g)
    atomic = g in {a.mask for a in lattice_atoms(sp)}
    if direct != atomic:
        raise InvariantError(f"maximality characterisations disagree for {f!r}")
    return direct


def enumerate_maximal_filters(space: FiniteSpace) -> list[OpenFilter]:
    return [principal_filter(space, a.mask) for a in lattice_atoms(space)]


def filter_at_history(ctx: QuantumContext, atom) -> OpenFilter:
    """Opens whose projection has character 1 at ``atom``."""
    a = ctx.atom(atom)
    members = set()
    for m in ctx.space.open_masks:
        v = character_eval(ctx, a, projection_of(ctx, m))
        if abs(v - 1.0) <= ctx.tol.eig:
            members.add(m)
        elif abs(v) > ctx.tol.eig:
            raise InvariantError(f"projection character {v} is neither 0 nor 1")
    return OpenFilter(ctx.space, frozenset(members))


# ---------------------------------------------------------------------------
# genericity and collapse
# ---------------------------------------------------------------------------


def _usable(p: Structure, env: Mapping, u: int) -> bool:
    return all(not u & ~p.domain_of(s) for s in env.values())


def _forced_on(p: Structure, f: F.Formula, env: Mapping, u: int) -> bool:
    return truth_value(p, f, env, u).mask == u


def genericity_check(f: OpenFilter, suite: Sequence[tuple[F.Formula, Mapping]], p: Structure) -> Report:
    """Suite-wise decision and witness conditions.

    Every entry needs some member forcing it or its negation; existential
    entries also need a member and a domain section forcing the body.
    """
    checks = []
    for k, (phi, env) in enumerate(suite):
        env = dict(env)
        members = [m for m in sorted(f.members, key=canonical_key) if _usable(p, env, m)]
        decided = next((m for m in members
                        if _forced_on(p, phi, env, m) or _forced_on(p, F.Not(phi), env, m)), None)
        name = f"{k}:{F.to_text(phi)}"
        checks.append(Check(f"decides[{name}]", decided is not None,
                            witness=None if decided is None else f.space.labels(decided)))
        if isinstance(phi, F.Exists):
            hit = None
            for m in members:
                for s in p.family(phi.domain):
                    if not m & ~p.domain_of(s) and _forced_on(p, phi.body, {**env, phi.var: s}, m):
                        hit = (m, s)
                        break
                if hit:
                    break
            checks.append(Check(f"witness[{name}]", hit is not None,
                                witness=None if hit is None else f.space.labels(hit[0])))
    return Report(tuple(checks))


def collapse_witness(f: OpenFilter, phi: F.Formula, env: Mapping | None, p: Structure) -> OpenSet | None:
    """A member forcing the negative translation of ``phi``, if any."""
    if not is_maximal(f):
        warnings.warn(f"{f!r} is not maximal; the collapse need not be two-valued", stacklevel=2)
    env = dict(env or {})
    g = F.godel_translate(phi)
    for m in sorted(f.members, key=canonical_key):
        if _usable(p, env, m) and _forced_on(p, g, env, m):
            return OpenSet(f.space, m)
    return None


def collapse_eval(f: OpenFilter, phi: F.Formula, env: Mapping | None, p: Structure) -> bool:
    """Truth of ``phi`` in the classical structure collapsed along ``f``."""
    return collapse_witness(f, phi, env, p) is not None


def collapse_value(ctx: QuantumContext, atom, a: HermitianOperator) -> float:
    """The definite value of ``a`` in the history given by ``atom``."""
    return character_eval(ctx, atom, a)


@dataclass
class ClassicalStructure:
    """Germ classes of sections with two-valued relations."""

    classes: tuple[tuple, ...]
    relations: dict[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    constants: dict[str, int] = field(default_factory=dict)

    def class_of(self, section) -> int:
        for i, c in enumerate(self.classes):
            if section in c:
                return i
        raise KeyError(section)

    def __len__(self) -> int:
        return len(self.classes)


_X, _Y = F.Var("_x"), F.Var("_y")


def _atom_for(name: str, arity: int) -> F.Formula:
    args = tuple(F.Var(f"_a{i}") for i in range(arity))
    if name == "in":
        return F.In(*args)
    if name == "leq":
        return F.Leq(*args)
    return F.Rel(name, args)


def collapse_structure(f: OpenFilter, p: Structure, elements: Sequence | None = None,
                       relations: Mapping[str, int] | None = None) -> ClassicalStructure:
    """Direct limit of ``p`` along ``f``.

    Two elements are identified when they agree on some member; a relation
    holds of classes when it is forced on some member. ``elements`` default
    to every section (presheaves) or every hereditary member of the declared
    families (variable sets) that is defined on some member of ``f``.
    ``relations`` maps names to arities; ``"in"`` and ``"leq"`` denote the
    distinguished atoms.
    """
    if not is_maximal(f):
        warnings.warn(f"{f!r} is not maximal; the collapse need not be two-valued", stacklevel=2)
    members = sorted(f.members, key=canonical_key)
    if elements is None:
        if isinstance(p, Presheaf):
            elements = p.all_sections()
        elif isinstance(p, VSetStructure):
            elements = hereditary_members([*itertools.chain.from_iterable(p.families.values()),
                                           *p.constants.values()])
        else:
            raise SectionDomainError("elements must be given for this structure")
    if relations is None:
        if isinstance(p, Presheaf):
            relations = {}
            for (name, _), ts in p.relations.items():
                for t in ts:
                    relations[name] = len(t)
                    break
        elif isinstance(p, VSetStructure):
            relations = {"in": 2}
        else:
            relations = {}

    def home(s) -> int | None:
        d = p.domain_of(s)
        return next((m for m in members if not m & ~d), None)

    live = [s for s in elements if home(s) is not None]
    eq = F.Eq(_X, _Y)
    classes: list[list] = []
    for s in live:
        for c in classes:
            t = c[0]
            common = p.domain_of(s) & p.domain_of(t)
            if any(not m & ~common and _forced_on(p, eq, {"_x": s, "_y": t}, m) for m in members):
                c.append(s)
                break
        else:
            classes.append([s])

    rels = {}
    for name, arity in relations.items():
        atom = _atom_for(name, arity)
        holds = set()
        for idx in itertools.product(range(len(classes)), repeat=arity):
            reps = [classes[i][0] for i in idx]
            common = p.space.full
            for s in reps:
                common &= p.domain_of(s)
            env = {f"_a{i}": s for i, s in enumerate(reps)}
            if any(not m & ~common and _forced_on(p, atom, env, m) for m in members):
                holds.add(idx)
        rels[name] = frozenset(holds)

    out = ClassicalStructure(tuple(tuple(c) for c in classes), rels)
    consts = getattr(p, "constants", {}) or {}
    for name, s in consts.items():
        try:
            out.constants[name] = out.class_of(s)
        except KeyError:
            pass
    return out

"""Formula suites and random generators shared by the self-test and the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import formula as F
from .forcing import Presheaf
from .topology import FiniteSpace

# Intuitionistically valid schemata; {p}, {q}, {r} are filled with atoms.
TAUTOLOGIES = (
    "{p} -> {p}",
    "{p} -> ~~{p}",
    "({p} & ({p} -> {q})) -> {q}",
    "~({p} & ~{p})",
    "({p} & {q}) -> {p}",
    "{p} -> ({p} | {q})",
    "(({p} -> {q}) & ({q} -> {r})) -> ({p} -> {r})",
    "~~~{p} -> ~{p}",
    "({p} | {q}) -> ({q} | {p})",
    "~({p} | {q}) -> (~{p} & ~{q})",
    "(~{p} | ~{q}) -> ~({p} & {q})",
    "({p} -> {q}) -> (~{q} -> ~{p})",
    "{p} -> ({q} -> {p})",
    "~~({p} | ~{p})",
    "(~~{p} & ~~{q}) -> ~~({p} & {q})",
    "({p} -> ({q} -> {r})) -> (({p} & {q}) -> {r})",
)

# First-order schemata over a domain S and a unary relation P.
QUANTIFIED_TAUTOLOGIES = (
    "forall x in S . x = x",
    "(forall x in S . P(x)) -> ~(exists x in S . ~P(x))",
    "(exists x in S . P(x)) -> ~(forall x in S . ~P(x))",
    "(exists x in S . ~P(x)) -> ~(forall x in S . P(x))",
    "(forall x in S . ~P(x)) -> ~(exists x in S . P(x))",
)

EXCLUDED_MIDDLE = "{p} | ~{p}"
PEIRCE = "(({p} -> {q}) -> {p}) -> {p}"


def instantiate(schema: str, atoms: Sequence[str]) -> list[str]:
    """Every filling of the schema's placeholders with the given atom texts."""
    slots = [s for s in ("p", "q", "r") if "{" + s + "}" in schema]
    out = []
    for combo in itertools.product(atoms, repeat=len(slots)):
        fill = {s: f"({a})" for s, a in zip(slots, combo)}
        out.append(schema.format(**fill))
    return out


def random_formula(rng: np.random.Generator, depth: int, *, constants: Sequence[str],
                   domains: Sequence[str] = (), relations: dict[str, int] | None = None,
                   rationals: Sequence[Fraction] = (), leq: bool = False,
                   membership: bool = False, _scope: tuple[str, ...] = ()) -> F.Formula:
    """A random closed formula of at most ``depth`` connective levels."""
    relations = relations or {}
    terms: list[F.Term] = [F.Const(c) for c in constants] + [F.Var(v) for v in _scope]
    if depth <= 0 or rng.random() < 0.2:
        kinds = ["eq"] + (["rel"] if relations else []) + (["leq"] if leq else []) + (["in"] if membership else [])
        kind = kinds[rng.integers(len(kinds))]
        pool = terms + ([F.Rat(r) for r in rationals] if kind == "leq" else [])

        def pick():
            return pool[rng.integers(len(pool))]

        if kind == "rel":
            name = sorted(relations)[rng.integers(len(relations))]
            return F.Rel(name, tuple(pick() for _ in range(relations[name])))
        cls = {"eq": F.Eq, "leq": F.Leq, "in": F.In}[kind]
        return cls(pick(), pick())
    kw = dict(constants=constants, domains=domains, relations=relations, rationals=rationals,
              leq=leq, membership=membership)
    ops = ["not", "and", "or", "implies"] + (["forall", "exists"] if domains else [])
    op = ops[rng.integers(len(ops))]
    if op == "not":
        return F.Not(random_formula(rng, depth - 1, _scope=_scope, **kw))
    if op in ("forall", "exists"):
        var = f"x{len(_scope)}"
        dom = domains[rng.integers(len(domains))]
        body = random_formula(rng, depth - 1, _scope=_scope + (var,), **kw)
        return (F.Forall if op == "forall" else F.Exists)(var, dom, body)
    cls = {"and": F.And, "or": F.Or, "implies": F.Implies}[op]
    return cls(random_formula(rng, depth - 1, _scope=_scope, **kw),
               random_formula(rng, depth - 1, _scope=_scope, **kw))


def constant_sheaf(space: FiniteSpace, rng: np.random.Generator | None = None,
                   germs: Sequence[str] = ("p", "q")) -> Presheaf:
    """Sections of the constant sheaf on ``space`` with a relation and two named sections.

    ``P`` holds at germ ``p``. Constant ``a`` is the global section that is
    ``p`` everywhere; ``b`` is a random global section (or the last one).
    Domain ``S`` lists every section over every nonempty open.
    """
    stalks = {x: list(germs) for x in space.points}
    rels = {"P": {x: [(germs[0],)] for x in space.points}}
    pre = Presheaf.from_stalks(space, stalks, relations=rels)
    glob = pre.sections_over(space.full)
    a = next(s for s in glob if all(g == germs[0] for _, g in s.ident))
    b = glob[-1] if rng is None else glob[rng.integers(len(glob))]
    pre.constants.update({"a": a, "b": b})
    pre.domains["S"] = tuple(s for s in pre.all_sections() if s.domain)
    return pre

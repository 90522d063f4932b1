"""Operators versus internal reals over a quantum context.

An observable ``A`` in the context's algebra has a spectral family
``P_r = {atoms with eigenvalue <= r}`` and a Dedekind cut whose lower and
upper predicates are

    q in L on Q  iff  q < a_s for every atom s in Q
    q in U on Q  iff  q > a_s for every atom s in Q

where ``a_s`` is the eigenvalue on atom ``s``. Both sides are step data over
finitely many breakpoints, so every check here is exact over a finite set of
representative rationals: each breakpoint, two interior points of every gap,
and one point beyond each end. Floats within the cut's tolerance of a
rational compare as equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import formula as F
from .checks import Check, Report
from .errors import CutAxiomError, QVSetsError, SpaceMismatchError, UnevaluableAtomError, UnknownDomainError
from .forcing import Structure
from .quantum import (
    HermitianOperator,
    QuantumContext,
    StateVector,
    born_measure,
    character_table,
    context_to_json,
    operator_from_values,
)
from .topology import OpenSet

Number = Fraction | float | int
Predicate = Callable[[Fraction, int], bool]


def _frac(q: Number) -> Fraction:
    return q if isinstance(q, Fraction) else Fraction(q)


def _snap_values(values: Sequence[float], tol: float) -> tuple[float, ...]:
    """Merge values within ``tol`` of a neighbour to the mean of their cluster."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    out = list(map(float, values))
    start = 0
    for k in range(1, len(order) + 1):
        if k == len(order) or values[order[k]] - values[order[k - 1]] > tol:
            group = order[start:k]
            mean = sum(values[i] for i in group) / len(group)
            for i in group:
                out[i] = mean if len(group) > 1 else float(values[i])
            start = k
    return tuple(out)


def _distinct(values: Sequence[float]) -> list[float]:
    return sorted(set(values))


def _tie_tol(distinct: Sequence[float], base: float) -> float:
    # keep gap representatives clear of the snapping window
    return min([base] + [(b - a) / 4 for a, b in zip(distinct, distinct[1:])])


def _representatives(distinct: Sequence[float]) -> list[Fraction]:
    if not distinct:
        return [Fraction(0)]
    vs = [Fraction(v) for v in distinct]
    reps = [vs[0] - 1]
    for a, b in zip(vs, vs[1:]):
        reps += [a, a + (b - a) / 3, a + 2 * (b - a) / 3]
    reps += [vs[-1], vs[-1] + 1]
    return reps


# ---------------------------------------------------------------------------
# spectral families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralFamily:
    """Step family: ``P_r`` is the last cumulative open whose breakpoint is ``<= r``."""

    ctx: QuantumContext
    breakpoints: tuple[float, ...]
    cumulative: tuple[int, ...]
    tol: float = 0.0

    def mask_at(self, r: Number) -> int:
        r = _frac(r)
        out = 0
        for b, m in zip(self.breakpoints, self.cumulative):
            if Fraction(b) <= r or abs(float(r - Fraction(b))) <= self.tol:
                out = m
        return out

    def at(self, r: Number) -> OpenSet:
        return OpenSet(self.ctx.space, self.mask_at(r))

    def representatives(self) -> list[Fraction]:
        return _representatives(self.breakpoints)

    def to_json(self) -> dict:
        sp = self.ctx.space
        return {"breakpoints": list(self.breakpoints),
                "cumulative": [sp.labels(m) for m in self.cumulative]}


def spectral_family_of(a: HermitianOperator, ctx: QuantumContext) -> SpectralFamily:
    return family_from_values(ctx, _snap_values(list(character_table(ctx, a)), ctx.tol.eig))


def family_from_values(ctx: QuantumContext, values: Sequence[float]) -> SpectralFamily:
    """Step family of the given atom values; ``r`` within the tie tolerance of a breakpoint counts as reaching it."""
    bps = _distinct(values)
    cum = tuple(sum(1 << i for i, v in enumerate(values) if v <= b) for b in bps)
    return SpectralFamily(ctx, tuple(bps), cum, _tie_tol(bps, ctx.tol.eig))


def check_spectral_axioms(sf: SpectralFamily) -> Report:
    """Meet law, empty meet, full join and right continuity, over representatives."""
    full = sf.ctx.space.full
    reps = sf.representatives()
    masks = {r: sf.mask_at(r) for r in reps}
    checks = []

    bad = next(((q, r) for q in reps for r in reps if masks[q] & masks[r] != masks[min(q, r)]), None)
    checks.append(Check("meet", bad is None, witness=None if bad is None else [str(x) for x in bad]))

    meet = full
    join = 0
    for m in masks.values():
        meet &= m
        join |= m
    checks.append(Check("empty_meet", meet == 0, witness=None if meet == 0 else sf.ctx.space.labels(meet)))
    checks.append(Check("full_join", join == full, witness=None if join == full else sf.ctx.space.labels(full & ~join)))

    bad = None
    for q in reps:
        above = [b for b in sf.breakpoints if Fraction(b) > q]
        step = (Fraction(above[0]) - q) / 2 if above else Fraction(1)
        if sf.mask_at(q + step) != masks[q]:
            bad = str(q)
            break
    checks.append(Check("right_continuous", bad is None, witness=bad))

    increasing = all(a < b for a, b in zip(sf.breakpoints, sf.breakpoints[1:])) and all(
        (a & ~b) == 0 and a != b for a, b in zip(sf.cumulative, sf.cumulative[1:]))
    checks.append(Check("monotone", increasing))
    return Report(tuple(checks))


# ---------------------------------------------------------------------------
# Dedekind cuts
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DedekindCut:
    """A locally constant real over the context: one value per atom."""

    ctx: QuantumContext
    values: tuple[float, ...]
    tol: float | None = None

    def __post_init__(self):
        if len(self.values) != len(self.ctx.atoms):
            raise SpaceMismatchError(f"expected {len(self.ctx.atoms)} values, got {len(self.values)}")
        base = self.ctx.tol.eig if self.tol is None else self.tol
        vals = _snap_values([float(v) for v in self.values], base)
        eff = _tie_tol(_distinct(vals), base)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tol", eff)
        object.__setattr__(self, "_exact", tuple(Fraction(v) for v in vals))
        object.__setattr__(self, "_ftol", Fraction(eff))
        object.__setattr__(self, "_memo", {})

    def _cmp(self, q: Fraction, i: int) -> int:
        diff = q - self._exact[i]
        if abs(diff) <= self._ftol:
            return 0
        return -1 if diff < 0 else 1

    def _masks(self, q: Fraction) -> tuple[int, int]:
        # atoms where q is a strict lower / strict upper bound; memoised per q
        hit = self._memo.get(q)
        if hit is not None:
            return hit
        lo = up = 0
        for i in range(len(self.values)):
            c = self._cmp(q, i)
            if c < 0:
                lo |= 1 << i
            elif c > 0:
                up |= 1 << i
        self._memo[q] = (lo, up)
        return lo, up

    def in_L(self, q: Number, opens) -> bool:
        mask = self.ctx.mask_of(opens)
        return mask & ~self._masks(_frac(q))[0] == 0

    def in_U(self, q: Number, opens) -> bool:
        mask = self.ctx.mask_of(opens)
        return mask & ~self._masks(_frac(q))[1] == 0

    def value(self, atom) -> float:
        return self.values[self.ctx.atom(atom).index]

    def representatives(self) -> list[Fraction]:
        return _representatives(_distinct(self.values))

    def same_as(self, other: "DedekindCut") -> bool:
        _same_ctx(self, other)
        return all(abs(a - b) <= max(self.tol, other.tol) for a, b in zip(self.values, other.values))

    def to_json(self, digits: int = 12) -> dict:
        return {"context": context_to_json(self.ctx, digits),
                "values": {a.label: round(v, digits) + 0.0 for a, v in zip(self.ctx.atoms, self.values)}}

    @classmethod
    def from_json(cls, ctx: QuantumContext, data: Mapping) -> "DedekindCut":
        vals = data.get("values", {})
        try:
            return cls(ctx, tuple(float(vals[a.label]) for a in ctx.atoms))
        except KeyError as e:
            raise QVSetsError(f"/values: missing atom {e.args[0]}") from None

    def __repr__(self) -> str:
        return f"DedekindCut({[round(v, 6) for v in self.values]})"


def _same_ctx(x: DedekindCut, y: DedekindCut) -> None:
    if x.ctx is not y.ctx:
        raise SpaceMismatchError("cuts live over different contexts")


def constant_cut(ctx: QuantumContext, a: Number) -> DedekindCut:
    return DedekindCut(ctx, (float(a),) * len(ctx.atoms))


def cut_of_operator(a: HermitianOperator, ctx: QuantumContext) -> DedekindCut:
    return DedekindCut(ctx, tuple(character_table(ctx, a)))


def cut_of_function(ctx: QuantumContext, f: Callable) -> DedekindCut:
    """The cut of an arbitrary function on atoms (all functions are continuous here)."""
    return DedekindCut(ctx, tuple(float(f(a)) for a in ctx.atoms))


def function_of_cut(c: DedekindCut) -> dict[str, float]:
    return {a.label: v for a, v in zip(c.ctx.atoms, c.values)}


def cut_add(x: DedekindCut, y: DedekindCut) -> DedekindCut:
    _same_ctx(x, y)
    return DedekindCut(x.ctx, tuple(a + b for a, b in zip(x.values, y.values)))


def cut_scale(r: float, x: DedekindCut) -> DedekindCut:
    return DedekindCut(x.ctx, tuple(float(r) * a for a in x.values))


# ---------------------------------------------------------------------------
# axiom checking
# ---------------------------------------------------------------------------


def _pointwise(pred: Predicate, reps, n: int) -> dict[Fraction, int]:
    return {q: sum(1 << i for i in range(n) if pred(q, 1 << i)) for q in reps}


def _locality(name: str, pred: Predicate, reps, ctx: QuantumContext, singles: dict) -> Check:
    """``pred`` holds on an open iff it holds at each of its atoms.

    This is restriction monotonicity plus closure under unions; once it
    holds, the predicate at ``q`` is determined by one mask of atoms.
    """
    sp = ctx.space
    for q in reps:
        ok = singles[q]
        for w in range(1, sp.full + 1):
            got = pred(q, w)
            want = (w & ~ok) == 0
            if got and not want:
                lost = next(i for i in range(len(ctx.atoms)) if w >> i & 1 and not ok >> i & 1)
                return Check(f"{name}_locality", False,
                             witness={"q": str(q), "open": sp.labels(w), "restricted_to": sp.labels(1 << lost)},
                             detail="membership lost under restriction")
            if want and not got:
                return Check(f"{name}_locality", False, witness={"q": str(q), "open": sp.labels(w)},
                             detail="membership on a cover does not glue")
    return Check(f"{name}_locality", True)


def check_cut_axioms(c: DedekindCut, *, lower: Predicate | None = None,
                     upper: Predicate | None = None) -> Report:
    """Check the cut axioms over representative rationals.

    ``lower``/``upper`` override the cut's own predicates (``(q, mask) ->
    bool``), which is how corrupted cuts are exercised. Checks:
    locality of each predicate, inhabitedness, downward/upward closure,
    roundedness, locatedness and disjointness.
    """
    ctx = c.ctx
    n = len(ctx.atoms)
    full = ctx.space.full
    lower = lower or c.in_L
    upper = upper or c.in_U
    reps = c.representatives()
    exact = set(Fraction(v) for v in _distinct(c.values))
    L = _pointwise(lower, reps, n)
    U = _pointwise(upper, reps, n)
    checks = [_locality("lower", lower, reps, ctx, L), _locality("upper", upper, reps, ctx, U)]

    lo = 0
    up = 0
    for q in reps:
        lo |= L[q]
        up |= U[q]
    checks.append(Check("inhabited", lo == full and up == full,
                        witness=None if lo == up == full else ctx.space.labels(full & ~(lo & up))))

    bad = next(((str(q), str(r)) for q in reps for r in reps
                if q < r and (L[r] & ~L[q] or U[q] & ~U[r])), None)
    checks.append(Check("closed", bad is None, witness=bad))

    bad = None
    for q in reps:
        # a gap point stands for an open interval, which contains a larger and a smaller rational
        above = L[q] if q not in exact else 0
        below = U[q] if q not in exact else 0
        for r in reps:
            if r > q:
                above |= L[r]
            elif r < q:
                below |= U[r]
        if L[q] & ~above or U[q] & ~below:
            bad = str(q)
            break
    checks.append(Check("rounded", bad is None, witness=bad))

    bad = next(((str(q), str(r)) for q in reps for r in reps if q < r and (L[q] | U[r]) != full), None)
    checks.append(Check("located", bad is None, witness=bad))

    bad = next((str(q) for q in reps if L[q] & U[q]), None)
    checks.append(Check("disjoint", bad is None, witness=bad))
    return Report(tuple(checks))


def weakened_upper(c: DedekindCut) -> Predicate:
    """``q in U on Q`` iff some atom of ``Q`` lies below ``q``: fails locality."""
    return lambda q, mask: any(c._cmp(q, i) > 0 for i in range(len(c.values)) if mask >> i & 1)


# ---------------------------------------------------------------------------
# back to operators
# ---------------------------------------------------------------------------


def family_of_cut(c: DedekindCut, *, upper: Predicate | None = None) -> SpectralFamily:
    """Recover ``P_r`` as the atoms where every rational above ``r`` is an upper bound."""
    upper = upper or c.in_U
    n = len(c.ctx.atoms)
    reps = c.representatives()
    U = _pointwise(upper, reps, n)

    def p(r: Fraction) -> int:
        out = (1 << n) - 1
        for q in reps:
            if q > r:
                out &= U[q]
        return out

    bps, cum = [], []
    prev = 0
    for r in reps:
        m = p(r)
        if m != prev:
            bps.append(float(r))
            cum.append(m)
            prev = m
    return SpectralFamily(c.ctx, tuple(bps), tuple(cum))


def operator_of_cut(c: DedekindCut, name: str = "B", *, check: bool = True) -> HermitianOperator:
    """``sum_i r_i (P_{r_i} - P_{r_{i-1}})`` over the recovered spectral family."""
    if check:
        rep = check_cut_axioms(c)
        if not rep.ok:
            raise CutAxiomError(f"cut axioms fail: {[ch.name for ch in rep.failures()]}", rep)
    sf = family_of_cut(c)
    values = [0.0] * len(c.ctx.atoms)
    prev = 0
    for r, m in zip(sf.breakpoints, sf.cumulative):
        for i in range(len(values)):
            if m >> i & 1 and not prev >> i & 1:
                values[i] = r
        prev = m
    return operator_from_values(c.ctx, values, name)


# ---------------------------------------------------------------------------
# order and intervals
# ---------------------------------------------------------------------------


def forced_leq(x: DedekindCut, y: DedekindCut) -> OpenSet:
    """Largest open where ``L_x`` is inside ``L_y`` and ``U_y`` is inside ``U_x``."""
    _same_ctx(x, y)
    ctx = x.ctx
    n = len(ctx.atoms)
    reps = _representatives(_distinct(x.values + y.values))
    ok = ctx.space.full
    for q in reps:
        for i in range(n):
            s = 1 << i
            if (x.in_L(q, s) and not y.in_L(q, s)) or (y.in_U(q, s) and not x.in_U(q, s)):
                ok &= ~s
    return OpenSet(ctx.space, ok)


def interval_truth(a: HermitianOperator, c: Number, d: Number, ctx: QuantumContext) -> OpenSet:
    """``P_d minus P_c``: atoms whose eigenvalue lies in the half-open ``(c, d]``."""
    c, d = _frac(c), _frac(d)
    if c > d:
        raise QVSetsError(f"empty interval: {c} > {d}")
    sf = spectral_family_of(a, ctx)
    return OpenSet(ctx.space, sf.mask_at(d) & ~sf.mask_at(c))


def interval_probability(a: HermitianOperator, c: Number, d: Number, h: StateVector,
                         ctx: QuantumContext) -> float:
    return born_measure(ctx, h, interval_truth(a, c, d, ctx))


# ---------------------------------------------------------------------------
# cuts as a forcing structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutSection:
    cut: DedekindCut
    domain: int


class CutStructure(Structure):
    """Named cuts over a context; ``=`` and ``<=`` atoms, rationals as constant cuts."""

    def __init__(self, ctx: QuantumContext, cuts: Mapping[str, DedekindCut] | None = None,
                 families: Mapping[str, Sequence[DedekindCut]] | None = None):
        self.ctx = ctx
        self.space = ctx.space
        self.cuts = dict(cuts or {})
        self.families = {k: tuple(self.section(c) for c in v) for k, v in (families or {}).items()}

    def section(self, c: DedekindCut, domain: int | None = None) -> CutSection:
        return CutSection(c, self.space.full if domain is None else domain)

    def domain_of(self, s: CutSection) -> int:
        return s.domain

    def restrict(self, s: CutSection, mask: int) -> CutSection:
        return CutSection(s.cut, mask)

    def constant(self, name: str) -> CutSection:
        if name not in self.cuts:
            return super().constant(name)
        return self.section(self.cuts[name])

    def rational(self, value: Fraction) -> CutSection:
        return self.section(constant_cut(self.ctx, value))

    def family(self, name: str):
        try:
            return self.families[name]
        except KeyError:
            raise UnknownDomainError(f"unknown domain {name!r}") from None

    def holds(self, atom, args, nbhd) -> bool:
        if isinstance(atom, F.Leq):
            return nbhd & ~forced_leq(args[0].cut, args[1].cut).mask == 0
        if isinstance(atom, F.Eq):
            x, y = args[0].cut, args[1].cut
            return all(abs(x.values[i] - y.values[i]) <= max(x.tol, y.tol)
                       for i in range(len(x.values)) if nbhd >> i & 1)
        raise UnevaluableAtomError(f"{type(atom).__name__.lower()!r} atoms are not interpreted on cuts")


def max_roundtrip_error(a: HermitianOperator, ctx: QuantumContext) -> float:
    b = operator_of_cut(cut_of_operator(a, ctx))
    return float(np.max(np.abs(b.matrix - a.matrix)))

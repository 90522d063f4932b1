"""A quick invariant sweep used by ``qvsets selftest``."""

from __future__ import annotations

import numpy as np

from . import formula as F
from .fixtures import non_hausdorff
from .forcing import truth_value
from .generic import enumerate_maximal_filters, filter_at_history, is_maximal
from .quantum import DEFAULT_TOL, Tolerances, born_measure, build_context, random_family, random_state
from .suites import EXCLUDED_MIDDLE, TAUTOLOGIES, instantiate
from .takeuti import check_spectral_axioms, max_roundtrip_error, spectral_family_of
from .topology import adjunction_witness, all_topologies, interior, random_topology
from .vset import hat_embed, hf_sets


def run_selftest(seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> dict[str, bool]:
    rng = np.random.default_rng(seed)
    out: dict[str, bool] = {}

    spaces = [s for n in range(1, 4) for s in all_topologies(n)]
    spaces += [random_topology(rng, int(rng.integers(1, 7))) for _ in range(20)]
    out["heyting adjunction"] = all(adjunction_witness(s) is None for s in spaces)
    ok = True
    for s in spaces:
        for m in range(s.full + 1):
            i = interior(s, m).mask
            ok &= (i & ~m) == 0 and interior(s, i).mask == i
    out["interior laws"] = bool(ok)

    p = non_hausdorff()
    atoms = ["a = b", "P(a)", "P(b)"]
    taut = [F.parse(t, p.domains, p.constants) for sch in TAUTOLOGIES for t in instantiate(sch, atoms[:2])]
    out["tautologies forced"] = all(truth_value(p, t).mask == p.space.full for t in taut)
    em = F.parse(instantiate(EXCLUDED_MIDDLE, ["a = b"])[0], constants=p.constants)
    out["excluded middle fails at 0"] = truth_value(p, em).points == ["1"]

    worst = 0.0
    born_ok = True
    for _ in range(20):
        n = int(rng.integers(1, 7))
        fam = random_family(rng, n, 2, levels=3)
        ctx = build_context(fam, tol)
        for op in fam:
            worst = max(worst, max_roundtrip_error(op, ctx))
            born_ok &= check_spectral_axioms(spectral_family_of(op, ctx)).ok
        h = random_state(rng, n)
        born_ok &= abs(born_measure(ctx, h, ctx.space.full) - 1.0) <= 1e-10
        born_ok &= abs(sum(born_measure(ctx, h, [a.label]) for a in ctx.atoms) - 1.0) <= 1e-10
        gens = sorted(filter_at_history(ctx, a).generator for a in ctx.atoms)
        born_ok &= gens == sorted(f.generator for f in enumerate_maximal_filters(ctx.space))
        born_ok &= all(is_maximal(filter_at_history(ctx, a)) for a in ctx.atoms)
    out["takeuti roundtrip <= 1e-8"] = worst <= 1e-8
    out["born measure and history filters"] = bool(born_ok)

    sp = p.space
    hats = [hat_embed(a, sp.whole) for a in hf_sets(3)]
    out["hat embedding injective"] = len(set(hats)) == len(hats)
    return out

"""Command-line interface: ``qvsets <command> ...``.

Exit codes: 0 on success, 2 on bad input, 3 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import formula as F
from . import fixtures
from .errors import CutAxiomError, InvariantError, QVSetsError
from .forcing import Presheaf, is_exact, truth_value
from .generic import collapse_value, collapse_witness, enumerate_maximal_filters, filter_at_history, is_maximal
from .quantum import (
    DEFAULT_TOL,
    QuantumContext,
    Tolerances,
    born_measure,
    build_context,
    context_to_json,
    observables_from_json,
    observables_to_json,
    state_from_json,
)
from .takeuti import (
    CutStructure,
    check_cut_axioms,
    check_spectral_axioms,
    cut_of_operator,
    interval_truth,
    max_roundtrip_error,
    spectral_family_of,
)
from .topology import FiniteSpace, adjunction_witness, lattice_atoms, minimal_neighborhood

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3


class _InputError(QVSetsError):
    pass


def _round(x, digits=12):
    if isinstance(x, float):
        if not math.isfinite(x):
            return x
        return round(x, digits) + 0.0
    if isinstance(x, dict):
        return {str(k): _round(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v, digits) for v in x]
    if isinstance(x, (np.floating,)):
        return _round(float(x), digits)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise _InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise _InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


def _tol(args) -> Tolerances:
    try:
        return Tolerances(herm=args.tol_herm, comm=args.tol_comm, eig=args.tol_eig)
    except ValueError as e:
        raise _InputError(str(e)) from None


def _load_context(path: str, tol: Tolerances) -> QuantumContext:
    data = _load_json(path)
    obs = data.get("observables", data) if isinstance(data, dict) else data
    return build_context(observables_from_json(obs, tol.herm), tol)


def _cut_structure(ctx: QuantumContext) -> CutStructure:
    cuts = {op.name: cut_of_operator(op, ctx) for op in ctx.family}
    return CutStructure(ctx, cuts, {"R": list(cuts.values())})


def _parse_for(structure, text: str, constants) -> F.Formula:
    domains = None
    if isinstance(structure, Presheaf):
        domains = structure.domains.keys()
    elif isinstance(structure, CutStructure):
        domains = structure.families.keys()
    return F.parse(text, domains, constants)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_context(args) -> tuple[dict, str]:
    tol = _tol(args)
    data = _load_json(args.observables)
    ops = observables_from_json(data.get("observables", data) if isinstance(data, dict) else data, tol.herm)
    ctx = build_context(ops, tol)
    out = context_to_json(ctx)
    out["observables"] = observables_to_json(list(ctx.family))
    lines = [f"{len(ctx.atoms)} atoms (dim {ctx.dim})", "atom   mult  " + "  ".join(o.name for o in ctx.family)]
    for a in ctx.atoms:
        lines.append(f"{a.label:6} {a.multiplicity:4}  " + "  ".join(f"{c:+.6g}" for c in a.character))
    return out, "\n".join(lines)


def _eval_target(args, tol):
    if args.fixture:
        if args.fixture != "non-hausdorff":
            raise _InputError(f"unknown fixture {args.fixture!r}")
        p = fixtures.non_hausdorff()
        return p, p.constants.keys()
    if args.presheaf:
        p = Presheaf.from_json(_load_json(args.presheaf))
        return p, p.constants.keys()
    if args.context:
        st = _cut_structure(_load_context(args.context, tol))
        return st, st.cuts.keys()
    raise _InputError("one of --presheaf, --context or --fixture is required")


def cmd_eval(args) -> tuple[dict, str]:
    st, consts = _eval_target(args, _tol(args))
    phi = _parse_for(st, args.formula, consts)
    tv = truth_value(st, phi)
    sp = st.space
    per_point = {x: bool(tv.mask >> i & 1) for i, x in enumerate(sp.points)}
    out = {"formula": F.to_text(phi), "truth_open": tv.points, "per_point": per_point}
    table = [f"[[{F.to_text(phi)}]] = {{{', '.join(tv.points)}}}"]
    table += [f"  {x}: {'forced' if v else 'not forced'}" for x, v in per_point.items()]
    return out, "\n".join(table)


def cmd_takeuti(args) -> tuple[dict, str]:
    ctx = _load_context(args.observables, _tol(args))
    ops = [ctx.operator(args.op)] if args.op else list(ctx.family)
    out = {}
    lines = []
    for op in ops:
        if args.action == "roundtrip":
            err = max_roundtrip_error(op, ctx)
            rep = check_cut_axioms(cut_of_operator(op, ctx))
            if not rep.ok:
                raise InvariantError(f"cut of {op.name} fails {[c.name for c in rep.failures()]}")
            out[op.name] = {"max_abs_error": err, "cut_axioms": rep.ok}
            lines.append(f"{op.name}: max |B - A| = {err:.3e}")
        else:
            sf = spectral_family_of(op, ctx)
            rep = check_spectral_axioms(sf)
            out[op.name] = {**sf.to_json(), "axioms": rep.ok}
            lines.append(f"{op.name}:")
            lines += [f"  P_{b:+.6g} = {{{', '.join(ctx.space.labels(m))}}}"
                      for b, m in zip(sf.breakpoints, sf.cumulative)]
    return out, "\n".join(lines)


def cmd_born(args) -> tuple[dict, str]:
    ctx = _load_context(args.observables, _tol(args))
    h = state_from_json(_load_json(args.state))
    atoms = args.atoms or [a.label for a in ctx.atoms]
    weights = {a.label: born_measure(ctx, h, [a.label]) for a in ctx.atoms}
    total = born_measure(ctx, h, atoms)
    out = {"atoms": list(atoms), "measure": total, "per_atom": weights}
    lines = [f"mu({{{', '.join(atoms)}}}) = {total:.12g}"] + [f"  {k}: {v:.12g}" for k, v in weights.items()]
    return out, "\n".join(lines)


def cmd_collapse(args) -> tuple[dict, str]:
    if not args.context:
        raise _InputError("--context is required")
    ctx = _load_context(args.context, _tol(args))
    st = _cut_structure(ctx)
    formulas = [_parse_for(st, t, st.cuts.keys()) for t in (args.formula or [])]
    if args.mode == "table":
        rows = {}
        for a in ctx.atoms:
            f = filter_at_history(ctx, a)
            rows[a.label] = {
                "values": {op.name: collapse_value(ctx, a, op) for op in ctx.family},
                "formulas": {F.to_text(phi): collapse_witness(f, phi, {}, st) is not None for phi in formulas},
            }
        out = {"atoms": rows}
        if args.state:
            h = state_from_json(_load_json(args.state))
            out["born"] = {a.label: born_measure(ctx, h, [a.label]) for a in ctx.atoms}
        lines = []
        for label, row in rows.items():
            vals = " ".join(f"{k}={v:+.6g}" for k, v in row["values"].items())
            truths = " ".join("T" if v else "F" for v in row["formulas"].values())
            born = f" mu={out['born'][label]:.6g}" if "born" in out else ""
            lines.append(f"{label}: {vals} {truths}{born}".rstrip())
        return out, "\n".join(lines)
    if not args.atom or not formulas:
        raise _InputError("collapse needs --atom and --formula")
    f = filter_at_history(ctx, args.atom)
    results = []
    for phi in formulas:
        w = collapse_witness(f, phi, {}, st)
        results.append({"formula": F.to_text(phi), "value": w is not None,
                        "witness_open": None if w is None else w.points})
    out = {"atom": ctx.atom(args.atom).label, "maximal": is_maximal(f), "results": results}
    lines = [f"{r['formula']}: {r['value']}" + (f" (forced on {{{', '.join(r['witness_open'])}}})"
                                                  if r["value"] else "") for r in results]
    return out, "\n".join(lines)


def cmd_topology(args) -> tuple[dict, str]:
    sp = FiniteSpace.from_json(_load_json(args.space))
    bad = adjunction_witness(sp)
    if bad is not None:
        raise InvariantError(f"Heyting adjunction fails at {[o.points for o in bad]}")
    out = {
        "space": sp.to_json(),
        "lattice_atoms": [a.points for a in lattice_atoms(sp)],
        "minimal_neighborhoods": {x: minimal_neighborhood(sp, x).points for x in sp.points},
        "maximal_filters": [sp.labels(f.generator) for f in enumerate_maximal_filters(sp)],
        "heyting_adjunction": True,
    }
    lines = [f"{len(sp.open_masks)} opens on {len(sp.points)} points"]
    lines += [f"  N({x}) = {{{', '.join(v)}}}" for x, v in out["minimal_neighborhoods"].items()]
    lines.append("lattice atoms: " + " ".join("{" + ",".join(a) + "}" for a in out["lattice_atoms"]))
    return out, "\n".join(lines)


# ---------------------------------------------------------------------------
# demos and self-test
# ---------------------------------------------------------------------------


def _demo_non_hausdorff(_args):
    p = fixtures.non_hausdorff()
    ab = F.parse("a = b", constants=p.constants)
    em = F.parse("a = b | ~(a = b)", constants=p.constants)
    checks = []
    tv_ab = truth_value(p, ab)
    tv_em = truth_value(p, em)
    checks.append(("exact presheaf", bool(is_exact(p))))
    checks.append(("[[a = b]] = {1}", tv_ab.points == ["1"]))
    checks.append(("[[a = b | ~(a = b)]] = {1}, not X", tv_em.points == ["1"]))
    checks.append(("excluded middle not forced at 0", not tv_em.mask & 1))
    out = {"truth": {"a = b": tv_ab.points, "a = b | ~(a = b)": tv_em.points},
           "checks": dict(checks)}
    return out, checks


def _demo_takeuti(_args):
    ctx = fixtures.two_dim_context()
    a = ctx.family[0]
    err = max_roundtrip_error(a, ctx)
    c = cut_of_operator(a, ctx)
    checks = [
        ("cut axioms", check_cut_axioms(c).ok),
        ("roundtrip error <= 1e-10", err <= 1e-10),
        ("P_-1 = {atom1}", spectral_family_of(a, ctx).at(-1).points == ["atom1"]),
        ("[[0 <= A <= 2]] = {atom0}", interval_truth(a, 0, 2, ctx).points == ["atom0"]),
        ("0 in L on {atom0}", c.in_L(0, ["atom0"])),
        ("0 not in L on X", not c.in_L(0, ctx.space.full)),
    ]
    return {"roundtrip_error": err, "values": dict(zip([x.label for x in ctx.atoms], c.values)),
            "checks": dict(checks)}, checks


def _demo_collapse(_args):
    ctx = fixtures.four_dim_context()
    st = _cut_structure(ctx)
    values = {}
    checks = []
    for at in ctx.atoms:
        f = filter_at_history(ctx, at)
        values[at.label] = {op.name: collapse_value(ctx, at, op) for op in ctx.family}
        checks.append((f"filter at {at.label} is maximal", is_maximal(f)))
        for op in ctx.family:
            phi = F.parse(f"0 <= {op.name}", constants=st.cuts)
            v = collapse_witness(f, phi, {}, st) is not None
            checks.append((f"{at.label}: collapsed 0 <= {op.name} matches value", v == (values[at.label][op.name] >= 0)))
    checks.append(("maximal filters = atoms", len(enumerate_maximal_filters(ctx.space)) == len(ctx.atoms)))
    return {"values": values, "checks": dict(checks)}, checks


DEMOS: dict[str, Callable] = {
    "non-hausdorff": _demo_non_hausdorff,
    "takeuti-2dim": _demo_takeuti,
    "collapse-4dim": _demo_collapse,
}


def cmd_demo(args) -> tuple[dict, str]:
    if args.name not in DEMOS:
        raise _InputError(f"unknown demo {args.name!r}; choose from {sorted(DEMOS)}")
    out, checks = DEMOS[args.name](args)
    lines = [f"[{'ok' if ok else 'FAIL'}] {name}" for name, ok in checks]
    if "values" in out and args.name == "collapse-4dim":
        lines += [f"{k}: " + " ".join(f"{n}={v:+g}" for n, v in row.items()) for k, row in out["values"].items()]
    if not all(ok for _, ok in checks):
        raise InvariantError("\n".join(lines))
    return out, "\n".join(lines)


def cmd_selftest(args) -> tuple[dict, str]:
    from .selftest import run_selftest

    results = run_selftest(seed=args.seed, tol=_tol(args))
    lines = [f"[{'ok' if ok else 'FAIL'}] {name}" for name, ok in results.items()]
    if not all(results.values()):
        raise InvariantError("\n".join(lines))
    return {"seed": args.seed, "results": results}, "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-herm", type=float, default=DEFAULT_TOL.herm)
    common.add_argument("--tol-comm", type=float, default=DEFAULT_TOL.comm)
    common.add_argument("--tol-eig", type=float, default=DEFAULT_TOL.eig)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--out", help="write the JSON report here as well")

    ap = argparse.ArgumentParser(prog="qvsets", description="Forcing over finite spaces and quantum contexts.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("context", parents=[common], help="build a quantum context from observables")
    p.add_argument("observables")
    p.set_defaults(func=cmd_context)

    p = sub.add_parser("eval", parents=[common], help="truth value of a formula")
    p.add_argument("formula")
    p.add_argument("--presheaf")
    p.add_argument("--context", help="observables or context JSON; operators become cuts")
    p.add_argument("--fixture", help="bundled presheaf (non-hausdorff)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("takeuti", parents=[common], help="operator/cut correspondence")
    p.add_argument("action", choices=("roundtrip", "family"))
    p.add_argument("observables")
    p.add_argument("--op")
    p.set_defaults(func=cmd_takeuti)

    p = sub.add_parser("born", parents=[common], help="Born measure of a set of atoms")
    p.add_argument("observables")
    p.add_argument("state")
    p.add_argument("--atoms", nargs="*")
    p.set_defaults(func=cmd_born)

    p = sub.add_parser("collapse", parents=[common], help="collapse along a history filter")
    p.add_argument("mode", nargs="?", choices=("eval", "table"), default="eval")
    p.add_argument("--context")
    p.add_argument("--atom")
    p.add_argument("--formula", action="append")
    p.add_argument("--state")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("topology", parents=[common], help="inspect a finite space")
    p.add_argument("space")
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("demo", parents=[common], help="run a bundled example")
    p.add_argument("name")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    p.set_defaults(func=cmd_selftest)
    return ap


def dumps(obj) -> str:
    return json.dumps(_round(obj), sort_keys=True, indent=2)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        out, table = args.func(args)
    except (InvariantError, CutAxiomError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (QVSetsError, OverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = dumps(out)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text if args.format == "json" else table)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

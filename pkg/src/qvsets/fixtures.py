"""Small bundled models used by the demos, the self-test and the test suite."""

from __future__ import annotations

import numpy as np

from .forcing import Presheaf
from .quantum import HermitianOperator, QuantumContext, build_context
from .topology import FiniteSpace, chain, sierpinski
from .vset import VariableSet, hat_embed, hereditary_members

EMPTY = frozenset()
ONE = frozenset({EMPTY})
TWO = frozenset({EMPTY, ONE})


def non_hausdorff() -> Presheaf:
    """Two global sections that agree on the open point and differ at the other.

    Space ``{0, 1}`` with opens ``{}, {1}, X``. The stalk at ``0`` has germs
    ``a`` and ``b``, both sent to the single germ ``*`` at ``1``. Constants
    ``a`` and ``b`` name the two global sections; the domain ``S`` lists every
    section, local ones included. The unary relation ``P`` holds of ``a``
    only.
    """
    sp = sierpinski(("0", "1"))
    return Presheaf.from_stalks(
        sp,
        {"0": ["a", "b"], "1": ["*"]},
        maps={("0", "1"): {"a": "*", "b": "*"}},
        relations={"P": {"0": [("a",)], "1": [("*",)]}},
        constants={"a": {"0": "a", "1": "*"}, "b": {"0": "b", "1": "*"}},
        domains={"S": [(["0", "1"], {"0": "a", "1": "*"}),
                       (["0", "1"], {"0": "b", "1": "*"}),
                       (["1"], {"1": "*"})]},
    )


def two_point_duplicate() -> Presheaf:
    """Discrete two-point space with two global sections restricting identically: not exact."""
    sp = FiniteSpace.discrete(["s1", "s2"])
    return Presheaf(sp, {3: ("a", "b"), 1: ("u",), 2: ("v",)},
                    {(3, 1): {"a": "u", "b": "u"}, (3, 2): {"a": "v", "b": "v"}})


def fiber_presheaf(space: FiniteSpace, germs=("p", "q")) -> Presheaf:
    """Sections of the constant sheaf with the given germs; all sections in domain ``S``."""
    stalks = {x: list(germs) for x in space.points}
    pre = Presheaf.from_stalks(space, stalks)
    pre.domains["S"] = tuple(pre.all_sections())
    return pre


def diag(name: str, values) -> HermitianOperator:
    return HermitianOperator(name, np.diag(np.asarray(values, dtype=float)))


def two_dim_context() -> QuantumContext:
    return build_context([diag("A", [1.0, -1.0])])


def four_dim_context() -> QuantumContext:
    return build_context([diag("A", [1.0, 1.0, -1.0, -1.0]), diag("B", [1.0, -1.0, 1.0, -1.0])])


def comprehension_instances() -> list[tuple[str, VariableSet, str, dict]]:
    """``(label, z, formula text over x, families)`` triples for comprehension.

    The family ``M`` lists every variable set reachable from ``z``, which
    stands in for "members of x" in bounded quantifiers.
    """
    out = []
    for label, sp in (("sierpinski", sierpinski()), ("chain3", chain(["a", "b", "c"]))):
        z = hat_embed(TWO, sp.whole)
        fams = {"M": hereditary_members([z])}
        out.append((f"{label}:inhabited", z, "exists y in M . y in x", fams))
        out.append((f"{label}:tautology", z, "x = x", fams))
        out.append((f"{label}:contradiction", z, "~(x = x)", fams))
    return out

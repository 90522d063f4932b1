from __future__ import annotations

import pytest

from oracles import hf_oracle
from qvsets import formula as F
from qvsets import vset as V
from qvsets.errors import RankError, SectionDomainError
from qvsets.fixtures import EMPTY, ONE, TWO, comprehension_instances
from qvsets.forcing import forces, truth_value
from qvsets.topology import FiniteSpace, chain, sierpinski

SPACES = [sierpinski(), chain("abc")]


def test_hf_sets_match_oracle():
    for r in range(4):
        assert set(V.hf_sets(r)) == hf_oracle(r)
    assert len(V.hf_sets(3)) == 16
    assert V.hf_text(TWO) == "{{{}},{}}"


@pytest.mark.parametrize("sp", SPACES + [FiniteSpace.discrete("xy")], ids=lambda s: str(len(s.open_masks)))
def test_hat_is_injective(sp):
    hats = [V.hat_embed(a, sp.whole) for a in V.hf_sets(3)]
    assert len(set(hats)) == 16
    for a, h in zip(V.hf_sets(3), hats):
        assert h.rank == V.hf_rank(a)


@pytest.mark.parametrize("sp", SPACES, ids=["sierpinski", "chain3"])
def test_hat_sets_are_valid(sp):
    for a in V.hf_sets(3):
        rep = V.validate(V.hat_embed(a, sp.whole))
        assert rep.ok, rep.failures()


def test_hat_on_disconnected_space_lacks_gluing():
    sp = FiniteSpace.discrete("xy")
    # mixing the two members across {x} and {y} has no global gluing
    assert V.validate(V.hat_embed(ONE, sp.whole)).ok
    rep = V.validate(V.hat_embed(TWO, sp.whole))
    assert not rep["condition3"].ok
    assert rep["condition3"].detail == "no gluing"
    assert V.validate(V.hat_embed(EMPTY, sp.whole)).ok


@pytest.mark.parametrize("sp", SPACES, ids=["sierpinski", "chain3"])
def test_empty_set_law_on_every_open(sp):
    st = V.VSetStructure(sp, constants={"e": V.hat_embed(EMPTY, sp.whole)},
                         families={"M": V.hereditary_members([V.hat_embed(TWO, sp.whole)])})
    law = F.parse("forall y in M . ~(y in e)", constants="e")
    for u in sp.open_masks:
        assert forces(st, law, u=u)
        e = V.empty_set(sp, u)
        assert e == V.hat_embed(EMPTY, u, sp)
        for y in st.family("M"):
            w = u & y.domain
            if w:
                assert not V.member_forced(V.restrict(y, w), V.restrict(e, w), w)


def test_membership_of_hats():
    sp = sierpinski()
    two = V.hat_embed(TWO, sp.whole)
    for u in sp.open_masks:
        assert V.member_forced(V.hat_embed(ONE, u, sp), V.restrict(two, u), u)
        assert V.member_forced(V.hat_embed(EMPTY, u, sp), V.restrict(two, u), u)
        if u:
            assert not V.member_forced(V.hat_embed(TWO, u, sp), V.restrict(two, u), u)
    assert V.member_forced(two, two, [])


def test_restrict_and_domain_errors():
    sp = sierpinski()
    one = V.hat_embed(ONE, ["1"], sp)
    with pytest.raises(SectionDomainError):
        V.restrict(one, sp.full)
    with pytest.raises(SectionDomainError):
        V.VariableSet(sp, 0b10, {0b01: frozenset({one})})
    with pytest.raises(RankError):
        V.hat_embed(frozenset({TWO, frozenset({TWO})}), sp.whole)


def test_condition_failures_are_detected():
    sp = sierpinski()
    one = V.hat_embed(ONE, sp.whole)
    e1 = V.empty_set(sp, ["1"])
    # member over X but not over its restriction: condition 2 fails
    bad2 = V.VariableSet(sp, sp.full, {sp.full: frozenset({V.empty_set(sp)})})
    assert not V.validate(bad2)["condition2"].ok
    # a member over {1} placed under the whole space: condition 1 fails
    bad1 = V.VariableSet(sp, sp.full, {sp.full: frozenset({e1})})
    assert not V.validate(bad1)["condition1"].ok
    assert not V.validate(one, rank_bound=0)["condition1"].ok


def test_comprehension_examples():
    sp = sierpinski()
    for label, z, text, fams in comprehension_instances():
        phi = F.parse(text, domains=fams.keys(), free=("x",))
        y = V.comprehend(z, phi, families=fams)
        if label.endswith("tautology"):
            assert y == z
        elif label.endswith("contradiction"):
            assert y == V.empty_set(z.space)
        elif label == "sierpinski:inhabited":
            assert y == V.hat_embed(frozenset({ONE}), sp.whole)


@pytest.mark.parametrize("inst", comprehension_instances(), ids=lambda i: i[0])
def test_comprehension_biconditional(inst):
    label, z, text, fams = inst
    sp = z.space
    phi = F.parse(text, domains=fams.keys(), free=("x",))
    y = V.comprehend(z, phi, families=fams)
    assert V.validate(y).ok
    st = V.VSetStructure(sp, fams, {"y": y, "z": z})
    x = F.Var("x")
    bicond = F.Forall("x", "M", F.And(
        F.Implies(F.In(x, F.Const("y")), F.And(F.In(x, F.Const("z")), phi)),
        F.Implies(F.And(F.In(x, F.Const("z")), phi), F.In(x, F.Const("y")))))
    assert forces(st, bicond)
    # and member by member on every open
    for w in sp.open_masks:
        if not w:
            continue
        for cand in fams["M"]:
            if cand.domain != w:
                continue
            lhs = V.member_forced(cand, V.restrict(y, w), w)
            rhs = (V.member_forced(cand, V.restrict(z, w), w)
                   and truth_value(st, phi, {"x": cand}, w).mask == w)
            assert lhs == rhs


def test_json_roundtrip():
    sp = chain("abc")
    for a in V.hf_sets(2):
        h = V.hat_embed(a, sp.whole)
        assert V.from_json(sp, V.to_json(h)) == h


def test_hereditary_members_is_closed():
    sp = sierpinski()
    ms = V.hereditary_members([V.hat_embed(TWO, sp.whole)])
    closed = set(ms)
    for m in ms:
        for gs in m.graph.values():
            assert gs <= closed

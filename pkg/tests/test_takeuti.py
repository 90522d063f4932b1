from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import interval_weight_oracle
from qvsets import formula as F
from qvsets import takeuti as T
from qvsets.errors import CutAxiomError, QVSetsError, SpaceMismatchError
from qvsets.fixtures import diag
from qvsets.forcing import truth_value
from qvsets.quantum import build_context, operator_from_values, random_family, random_state


def test_spectral_family_steps(ctx2):
    sf = T.spectral_family_of(ctx2.operator("A"), ctx2)
    assert sf.at(-2).points == []
    assert sf.at(-1).points == ["atom1"]
    assert sf.at(0).points == ["atom1"]
    assert sf.at(1).points == ["atom0", "atom1"]
    assert T.check_spectral_axioms(sf).ok


def test_spectral_axioms_detect_a_broken_family(ctx4):
    sf = T.SpectralFamily(ctx4, (0.0, 1.0), (0b0011, 0b1101))
    rep = T.check_spectral_axioms(sf)
    assert not rep["meet"].ok
    assert not rep["monotone"].ok
    assert rep["full_join"].ok
    short = T.check_spectral_axioms(T.SpectralFamily(ctx4, (0.0, 1.0), (0b0011, 0b0111)))
    assert short["meet"].ok
    assert not short["full_join"].ok and short["full_join"].witness == ["atom3"]


def test_cut_membership(ctx2):
    c = T.cut_of_operator(ctx2.operator("A"), ctx2)
    full, a0, a1 = 0b11, 0b01, 0b10
    assert c.in_L(0, a0) and not c.in_L(0, full)
    assert c.in_U(0, a1) and not c.in_U(0, full)
    assert c.in_L(-1.5, full) and c.in_U(1.5, full)
    # the value itself is in neither side
    assert not c.in_L(1, a0) and not c.in_U(1, a0)
    assert T.function_of_cut(c) == {"atom0": 1.0, "atom1": -1.0}


def test_cut_axioms_hold(ctx4):
    for name in ("A", "B"):
        assert T.check_cut_axioms(T.cut_of_operator(ctx4.operator(name), ctx4)).ok
    assert T.check_cut_axioms(T.constant_cut(ctx4, Fraction(1, 3))).ok


def test_weakened_upper_predicate_fails_locality(ctx2):
    c = T.cut_of_operator(ctx2.operator("A"), ctx2)
    rep = T.check_cut_axioms(c, upper=T.weakened_upper(c))
    assert not rep["upper_locality"].ok
    w = rep["upper_locality"].witness
    assert w["open"] == ["atom0", "atom1"]
    assert w["restricted_to"] == ["atom0"]
    with pytest.raises(CutAxiomError) as e:
        bad = T.DedekindCut(ctx2, c.values)
        object.__setattr__(bad, "in_U", T.weakened_upper(c))
        T.operator_of_cut(bad)
    assert not e.value.report.ok


def test_disjointness_and_locatedness_failures(ctx2):
    c = T.cut_of_operator(ctx2.operator("A"), ctx2)
    rep = T.check_cut_axioms(c, lower=lambda q, m: True)
    assert not rep["disjoint"].ok
    rep = T.check_cut_axioms(c, lower=lambda q, m: False)
    assert not rep["inhabited"].ok and not rep["located"].ok


def test_roundtrip_examples(ctx4):
    for name in ("A", "B"):
        a = ctx4.operator(name)
        assert np.allclose(T.operator_of_cut(T.cut_of_operator(a, ctx4)).matrix, a.matrix)
    b = operator_from_values(ctx4, [0.5, -2.0, 0.5, 7.25])
    assert T.max_roundtrip_error(b, ctx4) < 1e-12


@given(st.integers(0, 2**31), st.integers(1, 6), st.sampled_from([None, 3]))
def test_random_roundtrip(seed, n, levels):
    rng = np.random.default_rng(seed)
    fam = random_family(rng, n, 2, levels=levels)
    ctx = build_context(fam)
    for a in fam:
        assert T.max_roundtrip_error(a, ctx) <= 1e-8
        sf = T.spectral_family_of(a, ctx)
        assert T.check_spectral_axioms(sf).ok
        c = T.cut_of_operator(a, ctx)
        assert T.check_cut_axioms(c).ok
        rec = T.family_of_cut(c)
        assert rec.cumulative == sf.cumulative
        assert np.allclose(rec.breakpoints, sf.breakpoints, atol=1e-9)


def test_near_degenerate_values_are_snapped(ctx2):
    c = T.DedekindCut(ctx2, (1.0, 1.0 + 1e-12))
    assert c.values[0] == c.values[1]
    assert T.check_cut_axioms(c).ok


def test_arithmetic(ctx4):
    a = T.cut_of_operator(ctx4.operator("A"), ctx4)
    b = T.cut_of_operator(ctx4.operator("B"), ctx4)
    s = T.cut_add(a, b)
    assert s.values == (2.0, 0.0, 0.0, -2.0)
    assert T.cut_scale(-1, a).same_as(T.cut_of_operator(ctx4.operator("A").scaled(-1), ctx4))
    assert T.cut_of_function(ctx4, lambda atom: atom.index).values == (0.0, 1.0, 2.0, 3.0)
    with pytest.raises(SpaceMismatchError):
        T.cut_add(a, T.constant_cut(build_context([diag("A", [1, 2])]), 0))


def test_forced_leq(ctx4):
    a = T.cut_of_operator(ctx4.operator("A"), ctx4)
    b = T.cut_of_operator(ctx4.operator("B"), ctx4)
    assert T.forced_leq(a, b).points == ["atom0", "atom2", "atom3"]
    assert T.forced_leq(a, a).points == list(ctx4.space.points)
    assert T.forced_leq(T.constant_cut(ctx4, 0), a).points == ["atom0", "atom1"]


def test_interval_truth(ctx4):
    a = ctx4.operator("A")
    assert T.interval_truth(a, 0, 1, ctx4).points == ["atom0", "atom1"]
    assert T.interval_truth(a, -1, 1, ctx4).points == ["atom0", "atom1"]
    assert T.interval_truth(a, -2, 1, ctx4).points == list(ctx4.space.points)
    assert T.interval_truth(a, 1, 1, ctx4).points == []
    with pytest.raises(QVSetsError):
        T.interval_truth(a, 1, 0, ctx4)


def test_boundary_convention_differs_from_closed_order(ctx2):
    # the interval is half-open; forcing c <= A & A <= d is closed on both ends
    a = ctx2.operator("A")
    st_ = T.CutStructure(ctx2, {"A": T.cut_of_operator(a, ctx2)})
    closed = F.parse("-1 <= A & A <= 0", constants={"A"})
    assert truth_value(st_, closed).points == ["atom1"]
    assert T.interval_truth(a, -1, 0, ctx2).points == []
    # away from the spectrum the two agree
    closed = F.parse("-1/2 <= A & A <= 2", constants={"A"})
    assert truth_value(st_, closed).points == T.interval_truth(a, Fraction(-1, 2), 2, ctx2).points


@given(st.integers(0, 2**31))
def test_interval_probability_matches_lapack(seed):
    rng = np.random.default_rng(seed)
    (a,) = random_family(rng, 5, 1, levels=4)
    ctx = build_context([a])
    h = random_state(rng, 5)
    c, d = sorted(rng.uniform(-3, 3, 2))
    got = T.interval_probability(a, c, d, h, ctx)
    assert got == pytest.approx(interval_weight_oracle(a.matrix, c, d, h.amplitudes), abs=1e-10)


def test_cut_structure_atoms(ctx4):
    cuts = {n: T.cut_of_operator(ctx4.operator(n), ctx4) for n in ("A", "B")}
    st_ = T.CutStructure(ctx4, cuts, {"R": list(cuts.values())})
    assert truth_value(st_, F.parse("A = B", constants="AB")).points == ["atom0", "atom3"]
    assert truth_value(st_, F.parse("A <= 0", constants="A")).points == ["atom2", "atom3"]
    assert truth_value(st_, F.parse("exists x in R . x <= -1", constants="AB")).points == list(ctx4.space.points[1:])


def test_json_roundtrip(ctx4):
    c = T.cut_of_function(ctx4, lambda atom: atom.index / 3)
    back = T.DedekindCut.from_json(ctx4, c.to_json())
    assert back.same_as(c)
    assert T.spectral_family_of(ctx4.operator("A"), ctx4).to_json() == {
        "breakpoints": [-1.0, 1.0], "cumulative": [["atom2", "atom3"], ["atom0", "atom1", "atom2", "atom3"]]}


def test_spectrum_endpoints_absorb_rounding():
    # an eigenvalue a few ulps above 1 still reaches P_1
    ctx = build_context([diag("A", [1.0 + 4e-16, -1.0])])
    a = ctx.operator("A")
    assert T.interval_truth(a, 0, 1, ctx).points == ["atom0"]
    assert T.interval_truth(a, 1, 2, ctx).points == []
    assert T.spectral_family_of(a, ctx).at(1).points == ["atom0", "atom1"]

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvsets import quantum as Q
from qvsets.errors import NonCommutingError, NotHermitianError, NotInAlgebraError, QVSetsError, SpaceMismatchError
from qvsets.fixtures import diag

PAULI_X = np.array([[0, 1], [1, 0]], dtype=float)


def test_two_dim_context(ctx2):
    assert [a.label for a in ctx2.atoms] == ["atom0", "atom1"]
    assert [a.character for a in ctx2.atoms] == [(1.0, ), (-1.0, )]
    assert ctx2.space.to_json()["opens"] == [[], ["atom0"], ["atom1"], ["atom0", "atom1"]]


def test_four_dim_context(ctx4):
    assert [a.character for a in ctx4.atoms] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    assert all(a.multiplicity == 1 for a in ctx4.atoms)
    assert len(ctx4.space.open_masks) == 16


def test_degenerate_atoms_are_merged():
    ctx = Q.build_context([diag("A", [2, 2, 2, -1])])
    assert [a.multiplicity for a in ctx.atoms] == [3, 1]
    near = Q.build_context([diag("A", [1.0, 1.0 + 1e-12, 0.0])])
    assert [a.multiplicity for a in near.atoms] == [2, 1]


def test_projections_resolve_identity(ctx4):
    total = sum(ctx4.atom_projections)
    assert np.allclose(total, np.eye(4))
    for i, p in enumerate(ctx4.atom_projections):
        for j, q in enumerate(ctx4.atom_projections):
            assert np.allclose(p @ q, p if i == j else 0)


def test_non_commuting_family_is_rejected():
    with pytest.raises(NonCommutingError) as e:
        Q.build_context([diag("Z", [1, -1]), Q.HermitianOperator("X", PAULI_X)])
    assert e.value.pair == ("Z", "X")
    assert e.value.norm == pytest.approx(2 * np.sqrt(2))


def test_hermitian_validation():
    with pytest.raises(NotHermitianError):
        Q.HermitianOperator("N", np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotHermitianError):
        Q.HermitianOperator("R", np.zeros((2, 3)))
    with pytest.raises(NotHermitianError):
        Q.HermitianOperator("F", np.array([[np.nan]]))
    a = Q.HermitianOperator("A", np.array([[1, 1e-13], [0, 1]]))
    assert np.allclose(a.matrix, a.matrix.conj().T, atol=0)
    assert not a.matrix.flags.writeable


def test_dimension_mismatch():
    with pytest.raises(SpaceMismatchError):
        Q.build_context([diag("A", [1, 2]), diag("B", [1, 2, 3])])


def test_character_dichotomy(ctx2):
    assert Q.character_eval(ctx2, "atom0", "A") == 1.0
    assert Q.character_eval(ctx2, 1, ctx2.operator("A")) == -1.0
    with pytest.raises(NotInAlgebraError):
        Q.character_eval(ctx2, "atom0", Q.HermitianOperator("X", PAULI_X))
    assert Q.character_eval(ctx2, "atom0", Q.identity(2)) == 1.0


@given(st.integers(0, 2**31), st.integers(2, 6))
def test_characters_are_multiplicative_and_additive(seed, n):
    rng = np.random.default_rng(seed)
    a, b = Q.random_family(rng, n, 2, levels=4)
    ctx = Q.build_context([a, b])
    for atom in ctx.atoms:
        la, lb = Q.character_eval(ctx, atom, a), Q.character_eval(ctx, atom, b)
        assert Q.character_eval(ctx, atom, a @ a) == pytest.approx(la * la, abs=1e-9)
        assert Q.character_eval(ctx, atom, a + b) == pytest.approx(la + lb, abs=1e-9)
        assert Q.character_eval(ctx, atom, a @ b) == pytest.approx(la * lb, abs=1e-9)


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_random_context_characters_match_lapack(seed, n):
    rng = np.random.default_rng(seed)
    (a,) = Q.random_family(rng, n, 1, levels=3)
    ctx = Q.build_context([a])
    w = np.linalg.eigvalsh(a.matrix)
    got = sorted(x for atom in ctx.atoms for x in [atom.character[0]] * atom.multiplicity)
    assert np.allclose(got, w, atol=1e-9)
    chars = [atom.character for atom in ctx.atoms]
    assert chars == sorted(chars, reverse=True)


def test_born_measure(ctx4):
    h = Q.StateVector.normalized([1, 1j, 0, 2])
    probs = [Q.born_measure(ctx4, h, [a]) for a in ctx4.atoms]
    assert probs == pytest.approx([1 / 6, 1 / 6, 0, 4 / 6])
    assert Q.born_measure(ctx4, h, ctx4.space.points) == pytest.approx(1.0)
    assert Q.born_measure(ctx4, h, []) == 0.0
    assert Q.born_measure(ctx4, h, ["atom0", "atom3"]) == pytest.approx(5 / 6)


@given(st.integers(0, 2**31))
def test_born_additivity(seed):
    rng = np.random.default_rng(seed)
    ctx = Q.build_context(Q.random_family(rng, 5, 2, levels=3))
    h = Q.random_state(rng, 5)
    n = len(ctx.atoms)
    u, v = int(rng.integers(1 << n)), int(rng.integers(1 << n))
    mu = lambda m: Q.born_measure(ctx, h, ctx.space.labels(m))  # noqa: E731
    assert mu(u | v) + mu(u & v) == pytest.approx(mu(u) + mu(v), abs=1e-12)


def test_state_validation():
    with pytest.raises(QVSetsError):
        Q.StateVector(np.array([1.0, 1.0]))
    assert Q.StateVector(np.array([1.0, 1.0]), allow_unnormalized=True).dim == 2
    with pytest.raises(SpaceMismatchError):
        Q.born_measure(Q.build_context([diag("A", [1, 2, 3])]), Q.StateVector(np.array([1.0, 0.0])), [])


def test_operator_from_values_and_projection(ctx4):
    b = Q.operator_from_values(ctx4, [4, 3, 2, 1])
    assert np.allclose(b.matrix, np.diag([4, 3, 2, 1]))
    p = Q.projection_of(ctx4, ["atom0", "atom2"])
    assert np.allclose(p.matrix, np.diag([1, 0, 1, 0]))


def test_json_roundtrip_and_pointers():
    ops = [diag("A", [1, 1, -1, -1]), Q.HermitianOperator("Y", np.array([[0, -1j], [1j, 0]]))]
    back = Q.observables_from_json(Q.observables_to_json(ops[1:]))
    assert np.allclose(back[0].matrix, ops[1].matrix)
    bad = {"dim": 2, "operators": [{"name": "A", "matrix": [[1, 0], [0, 1]]},
                                   {"name": "B", "matrix": [[1, 2], [0, 1]]}]}
    with pytest.raises(NotHermitianError, match="/operators/1/matrix"):
        Q.observables_from_json(bad)
    with pytest.raises(QVSetsError, match="/operators/0/matrix"):
        Q.observables_from_json({"dim": 3, "operators": [{"matrix": [[1, 0], [0, 1]]}]})
    h = Q.state_from_json({"amplitudes": [[0.6, 0], [0, 0.8]]})
    assert np.allclose(h.amplitudes, [0.6, 0.8j])
    js = Q.context_to_json(Q.build_context(ops[:1]))
    assert js["atoms"][0] == {"label": "atom0", "multiplicity": 2, "character": {"A": 1.0}}

"""Both kernel backends against each other and against LAPACK."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qvsets import _kernels as K
from qvsets.quantum import random_unitary
from qvsets.topology import all_topologies, random_topology

BACKENDS = ["numpy"] + (["numba"] if K.numba is not None else [])


def _random_hermitian(rng, n, degenerate=False):
    u = random_unitary(rng, n)
    w = rng.integers(-2, 3, n).astype(float) if degenerate else rng.normal(size=n)
    return (u * w) @ u.conj().T, np.sort(w)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
@pytest.mark.parametrize("degenerate", [False, True])
def test_jacobi_against_lapack(backend, n, degenerate):
    rng = np.random.default_rng(n * 7 + degenerate)
    a, w_true = _random_hermitian(rng, n, degenerate)
    w, v = K.jacobi_eigh(a, backend=backend)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
    assert np.allclose(w, w_true, atol=1e-10)
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-10)
    assert np.allclose(a @ v, v * w, atol=1e-9)


def test_jacobi_rejects_non_square():
    with pytest.raises(ValueError):
        K.jacobi_eigh(np.zeros((2, 3)))


def test_jacobi_diagonal_input_is_untouched():
    w, v = K.jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    assert w.tolist() == [-1.0, 2.0, 3.0]
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])


@pytest.mark.skipif(K.numba is None, reason="numba unavailable")
def test_backends_agree_on_jacobi():
    rng = np.random.default_rng(3)
    a, _ = _random_hermitian(rng, 12)
    w1, v1 = K.jacobi_eigh(a, backend="numba")
    w2, v2 = K.jacobi_eigh(a, backend="numpy")
    assert np.allclose(w1, w2, atol=1e-12)
    # eigenvectors agree up to phase for a simple spectrum
    overlap = np.abs(np.sum(v1.conj() * v2, axis=0))
    assert np.allclose(overlap, 1.0, atol=1e-9)


@pytest.mark.skipif(K.numba is None, reason="numba unavailable")
@given(st.integers(0, 2**31), st.integers(1, 7))
def test_backends_agree_on_lattice_kernels(seed, n):
    sp = random_topology(np.random.default_rng(seed), n)
    arr = sp.open_array()
    full = sp.full
    assert np.array_equal(K.heyting_table(arr, full, backend="numba"), K.heyting_table(arr, full, backend="numpy"))
    assert K.adjunction_violation(arr, full, backend="numba") is None
    assert K.adjunction_violation(arr, full, backend="numpy") is None
    for s in range(full + 1):
        assert K.interior_mask(arr, s, backend="numba") == K.interior_mask(arr, s, backend="numpy")
    srt = np.sort(arr)
    assert K.closure_violation(srt, backend="numba") is None
    assert K.closure_violation(srt, backend="numpy") is None


@pytest.mark.parametrize("backend", BACKENDS)
def test_violations_are_reported(backend):
    # {a} and {b} without {a, b}: not closed under union
    srt = np.array([0, 1, 2, 7], dtype=np.int64)
    assert K.closure_violation(srt, backend=backend) == (1, 2)
    # the adjunction is a set-level identity, so it survives even here
    assert K.adjunction_violation(srt, 7, backend=backend) is None


@pytest.mark.parametrize("backend", BACKENDS)
def test_adjunction_holds_on_all_three_point_topologies(backend):
    for sp in all_topologies(3):
        assert K.adjunction_violation(sp.open_array(), sp.full, backend=backend) is None


def test_backend_flag():
    assert K.BACKEND in ("numba", "numpy")
    assert K.USE_NUMBA == (K.BACKEND == "numba")

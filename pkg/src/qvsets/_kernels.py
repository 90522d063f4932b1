"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with ``numba.njit`` and a
vectorised pure-numpy version. Both implement the same algorithm. The numba
path is used unless ``QVSETS_DISABLE_NUMBA`` is set to a truthy value or
numba cannot be imported; ``BACKEND`` reports which one is active.

Open sets are handled as int64 bit masks over point indices (bit i set means
point i is a member), so spaces are limited to 62 points here.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("QVSETS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = numba is not None and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

MAX_KERNEL_POINTS = 62


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# cyclic Jacobi for complex Hermitian matrices
# ---------------------------------------------------------------------------


def _rotation(app, aqq, apq):
    # unitary G = diag(1, conj(e)) @ [[c, s], [-s, c]] zeroing the (p, q) entry
    mag = abs(apq)
    e = apq / mag
    theta = (aqq - app) / (2.0 * mag)
    sgn = 1.0 if theta >= 0.0 else -1.0
    t = sgn / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    ce = np.conj(e)
    return c + 0j, s + 0j, -s * ce, c * ce


_rotation_nb = _njit(_rotation)


@_njit
def _jacobi_nb(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                m = abs(a[p, q])
                if m > off:
                    off = m
        if off <= tol:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) == 0.0:
                    continue
                gpp, gpq, gqp, gqq = _rotation_nb(a[p, p].real, a[q, q].real, apq)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * gpp + akq * gqp
                    a[k, q] = akp * gpq + akq * gqq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = np.conj(gpp) * apk + np.conj(gqp) * aqk
                    a[q, k] = np.conj(gpq) * apk + np.conj(gqq) * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * gpp + vkq * gqp
                    v[k, q] = vkp * gpq + vkq * gqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, sweeps


def _jacobi_np(a, tol, max_sweeps):
    n = a.shape[0]
    a = np.array(a, dtype=np.complex128, copy=True)
    v = np.eye(n, dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    sweeps = 0
    for _ in range(max_sweeps):
        if n < 2 or np.max(np.abs(a[iu])) <= tol:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0:
                    continue
                gpp, gpq, gqp, gqq = _rotation(a[p, p].real, a[q, q].real, apq)
                colp, colq = a[:, p].copy(), a[:, q]
                a[:, p] = colp * gpp + colq * gqp
                a[:, q] = colp * gpq + colq * gqq
                rowp, rowq = a[p, :].copy(), a[q, :]
                a[p, :] = np.conj(gpp) * rowp + np.conj(gqp) * rowq
                a[q, :] = np.conj(gpq) * rowp + np.conj(gqq) * rowq
                vp, vq = v[:, p].copy(), v[:, q]
                v[:, p] = vp * gpp + vq * gqp
                v[:, q] = vp * gpq + vq * gqq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    return np.real(np.diag(a)).copy(), v, sweeps


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100, backend: str | None = None):
    """Eigen-decompose a Hermitian matrix with cyclic complex Jacobi rotations.

    Sweeps continue until every off-diagonal modulus is at most
    ``tol * max(1, ||a||_F)``. Returns ``(w, v)`` with ascending eigenvalues
    ``w`` and unitary ``v`` whose columns are the eigenvectors.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    thresh = tol * max(1.0, float(np.linalg.norm(a)))
    use_nb = USE_NUMBA if backend is None else backend == "numba"
    impl = _jacobi_nb if use_nb else _jacobi_np
    w, v, sweeps = impl(a, thresh, max_sweeps)
    if sweeps >= max_sweeps:
        raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


# ---------------------------------------------------------------------------
# bit-mask lattice kernels
# ---------------------------------------------------------------------------


@_njit
def _interior_nb(opens, s):
    acc = np.int64(0)
    for o in opens:
        if (o & ~s) == 0:
            acc |= o
    return acc


def _interior_np(opens, s):
    inside = opens[(opens & ~np.int64(s)) == 0]
    return np.int64(np.bitwise_or.reduce(inside)) if inside.size else np.int64(0)


def interior_mask(opens: np.ndarray, s: int, backend: str | None = None) -> int:
    """Union of all opens contained in ``s``."""
    use_nb = USE_NUMBA if backend is None else backend == "numba"
    impl = _interior_nb if use_nb else _interior_np
    return int(impl(opens, np.int64(s)))


@_njit
def _heyting_table_nb(opens, full):
    m = opens.shape[0]
    out = np.empty((m, m), dtype=np.int64)
    for i in range(m):
        nu = full & ~opens[i]
        for j in range(m):
            cand = nu | opens[j]
            acc = np.int64(0)
            for o in opens:
                if (o & ~cand) == 0:
                    acc |= o
            out[i, j] = acc
    return out


def _heyting_row_np(opens, u, full):
    cand = (full & ~u) | opens
    inside = (opens[None, :] & ~cand[:, None]) == 0
    return np.bitwise_or.reduce(np.where(inside, opens[None, :], 0), axis=1)


def _heyting_table_np(opens, full):
    return np.stack([_heyting_row_np(opens, u, full) for u in opens]) if opens.size else np.empty((0, 0), np.int64)


def heyting_table(opens: np.ndarray, full: int, backend: str | None = None) -> np.ndarray:
    """``T[i, j]`` is the Heyting implication ``opens[i] -> opens[j]``."""
    use_nb = USE_NUMBA if backend is None else backend == "numba"
    impl = _heyting_table_nb if use_nb else _heyting_table_np
    return impl(opens, np.int64(full))


@_njit
def _adjunction_nb(opens, full):
    m = opens.shape[0]
    for i in range(m):
        u = opens[i]
        nu = full & ~u
        for j in range(m):
            v = opens[j]
            cand = nu | v
            impl = np.int64(0)
            for o in opens:
                if (o & ~cand) == 0:
                    impl |= o
            for k in range(m):
                w = opens[k]
                lhs = ((w & u) & ~v) == 0
                rhs = (w & ~impl) == 0
                if lhs != rhs:
                    return k, i, j
    return -1, -1, -1


def _adjunction_np(opens, full):
    for i, u in enumerate(opens):
        impl = _heyting_row_np(opens, u, full)
        lhs = ((opens[:, None] & u) & ~opens[None, :]) == 0
        rhs = (opens[:, None] & ~impl[None, :]) == 0
        bad = np.argwhere(lhs != rhs)
        if bad.size:
            k, j = bad[0]
            return int(k), i, int(j)
    return -1, -1, -1


def adjunction_violation(opens: np.ndarray, full: int, backend: str | None = None):
    """First ``(w, u, v)`` index triple breaking ``w & u <= v  <=>  w <= (u -> v)``.

    Returns ``None`` when the adjunction holds for every triple of opens.
    """
    use_nb = USE_NUMBA if backend is None else backend == "numba"
    impl = _adjunction_nb if use_nb else _adjunction_np
    k, i, j = impl(opens, np.int64(full))
    return None if k < 0 else (int(k), int(i), int(j))


@_njit
def _closure_nb(sorted_opens):
    m = sorted_opens.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            for x in (sorted_opens[i] | sorted_opens[j], sorted_opens[i] & sorted_opens[j]):
                k = np.searchsorted(sorted_opens, x)
                if k >= m or sorted_opens[k] != x:
                    return i, j
    return -1, -1


def _closure_np(sorted_opens):
    a, b = sorted_opens[:, None], sorted_opens[None, :]
    ok = np.isin(a | b, sorted_opens) & np.isin(a & b, sorted_opens)
    bad = np.argwhere(~ok)
    if bad.size:
        i, j = bad[0]
        return int(i), int(j)
    return -1, -1


def closure_violation(sorted_opens: np.ndarray, backend: str | None = None):
    """First index pair whose union or intersection is missing, else ``None``."""
    use_nb = USE_NUMBA if backend is None else backend == "numba"
    impl = _closure_nb if use_nb else _closure_np
    i, j = impl(sorted_opens)
    return None if i < 0 else (int(i), int(j))

"""Finite quantum contexts from commuting Hermitian observables.

The joint eigenspaces of a commuting family are the points ("atoms") of the
context. Each atom carries an orthonormal basis block and the eigenvalue of
every family member on it. Since the spectrum is finite, every subset of
atoms is open and the open lattice is the Boolean algebra of projections
``P_U = sum of the atom projections in U``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._kernels import jacobi_eigh
from .errors import (
    NonCommutingError,
    NotHermitianError,
    NotInAlgebraError,
    QVSetsError,
    SpaceMismatchError,
)
from .topology import FiniteSpace, OpenSet


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    comm: float = 1e-9
    eig: float = 1e-8

    def __post_init__(self):
        for name in ("herm", "comm", "eig"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")


DEFAULT_TOL = Tolerances()


def _scale(m: np.ndarray) -> float:
    return max(1.0, float(np.linalg.norm(m)))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    name: str
    matrix: np.ndarray
    tol: float = DEFAULT_TOL.herm

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise NotHermitianError(f"{self.name}: expected a nonempty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NotHermitianError(f"{self.name}: non-finite entries")
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > self.tol * _scale(m):
            raise NotHermitianError(f"{self.name}: not Hermitian (max deviation {dev:.3g})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "HermitianOperator") -> "HermitianOperator":
        # only Hermitian when the factors commute, which is the intended use
        return HermitianOperator(f"{self.name}{other.name}", self.matrix @ other.matrix, tol=1e-8)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(f"{self.name}+{other.name}", self.matrix + other.matrix)

    def scaled(self, r: float) -> "HermitianOperator":
        return HermitianOperator(f"{r:g}{self.name}", r * self.matrix)

    def __repr__(self) -> str:
        return f"HermitianOperator({self.name!r}, dim={self.dim})"


def identity(n: int, name: str = "I") -> HermitianOperator:
    return HermitianOperator(name, np.eye(n))


@dataclass(frozen=True, eq=False)
class Atom:
    label: str
    index: int
    basis: np.ndarray
    character: tuple[float, ...]

    @property
    def multiplicity(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True, eq=False)
class QuantumContext:
    family: tuple[HermitianOperator, ...]
    atoms: tuple[Atom, ...]
    tol: Tolerances
    space: FiniteSpace = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "space", FiniteSpace.discrete([a.label for a in self.atoms]))

    @property
    def dim(self) -> int:
        return self.family[0].dim

    def atom(self, key) -> Atom:
        if isinstance(key, Atom):
            if key not in self.atoms:
                raise SpaceMismatchError(f"{key.label} belongs to another context")
            return key
        if isinstance(key, (int, np.integer)) and 0 <= key < len(self.atoms):
            return self.atoms[int(key)]
        for a in self.atoms:
            if a.label == key:
                return a
        raise QVSetsError(f"unknown atom {key!r}")

    def operator(self, key) -> HermitianOperator:
        if isinstance(key, HermitianOperator):
            return key
        if isinstance(key, np.ndarray):
            return HermitianOperator("M", key)
        for op in self.family:
            if op.name == key:
                return op
        raise QVSetsError(f"unknown operator {key!r}")

    @functools.cached_property
    def atom_projections(self) -> tuple[np.ndarray, ...]:
        return tuple(a.basis @ a.basis.conj().T for a in self.atoms)

    def mask_of(self, atoms) -> int:
        if isinstance(atoms, (int, np.integer, OpenSet)):
            return self.space.mask_of(atoms)
        return self.space.mask_of(self.atom(a).label for a in atoms)

    def __repr__(self) -> str:
        return f"QuantumContext(dim={self.dim}, atoms={len(self.atoms)}, family={[o.name for o in self.family]})"


# ---------------------------------------------------------------------------
# joint diagonalisation
# ---------------------------------------------------------------------------


def _clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Index groups of ascending ``w`` split wherever consecutive gaps exceed ``tol``."""
    if w.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(w) > tol) + 1
    return np.split(np.arange(w.size), cuts)


def _refine(blocks: list[np.ndarray], m: np.ndarray, tol_eig: float) -> list[np.ndarray]:
    out = []
    thresh = tol_eig * max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(m)))) if m.size else 1.0)
    for b in blocks:
        sub = b.conj().T @ m @ b
        w, v = jacobi_eigh((sub + sub.conj().T) / 2)
        for idx in _clusters(w, thresh):
            out.append(b @ v[:, idx])
    return out


def commutator_norm(a: HermitianOperator, b: HermitianOperator) -> float:
    return float(np.linalg.norm(a.matrix @ b.matrix - b.matrix @ a.matrix))


def _cmp_chars(tol: float):
    def cmp(x, y):
        for a, b in zip(x[0], y[0]):
            if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                return -1 if a > b else 1
        return (x[1] > y[1]) - (x[1] < y[1])
    return functools.cmp_to_key(cmp)


def build_context(family: Sequence[HermitianOperator], tol: Tolerances = DEFAULT_TOL) -> QuantumContext:
    """Joint eigenspaces of a commuting Hermitian family.

    Diagonalise the first operator, then split every eigenspace by the
    compression of each subsequent operator. Eigenvalues closer than
    ``tol.eig`` (relative to the operator's spectral radius, floor 1) are
    merged. Atoms are ordered by character vector, descending.
    """
    family = tuple(family)
    if not family:
        raise QVSetsError("the observable family is empty")
    n = family[0].dim
    for op in family:
        if op.dim != n:
            raise SpaceMismatchError(f"{op.name} has dim {op.dim}, expected {n}")
    for i, a in enumerate(family):
        for b in family[i + 1:]:
            c = commutator_norm(a, b)
            if c > tol.comm * max(1.0, _scale(a.matrix) * _scale(b.matrix)):
                raise NonCommutingError(f"{a.name} and {b.name} do not commute (||[{a.name},{b.name}]|| = {c:.3g})",
                                        (a.name, b.name), c)
    blocks = [np.eye(n, dtype=np.complex128)]
    for op in family:
        blocks = _refine(blocks, op.matrix, tol.eig)
    chars = [tuple(float(np.trace(b.conj().T @ op.matrix @ b).real) / b.shape[1] for op in family)
             for b in blocks]
    order = sorted(((c, i) for i, c in enumerate(chars)), key=_cmp_chars(tol.eig))
    atoms = tuple(Atom(f"atom{k}", k, blocks[i], chars[i]) for k, (_, i) in enumerate(order))
    return QuantumContext(family, atoms, tol)


# ---------------------------------------------------------------------------
# characters and projections
# ---------------------------------------------------------------------------


def character_eval(ctx: QuantumContext, atom, op) -> float:
    """Eigenvalue of ``op`` on the atom's eigenspace.

    Raises :class:`NotInAlgebraError` unless ``op`` acts as a scalar there.
    """
    a = ctx.atom(atom)
    m = ctx.operator(op).matrix
    if m.shape[0] != ctx.dim:
        raise SpaceMismatchError(f"operator has dim {m.shape[0]}, context has {ctx.dim}")
    u = a.basis
    img = m @ u
    val = float(np.trace(u.conj().T @ img).real) / u.shape[1]
    err = float(np.max(np.abs(img - val * u)))
    if err > ctx.tol.eig * _scale(m):
        raise NotInAlgebraError(f"operator is not scalar on {a.label} (residual {err:.3g})")
    return val


def character_table(ctx: QuantumContext, op) -> np.ndarray:
    return np.array([character_eval(ctx, a, op) for a in ctx.atoms])


def projection_of(ctx: QuantumContext, atoms) -> HermitianOperator:
    mask = ctx.mask_of(atoms)
    out = np.zeros((ctx.dim, ctx.dim), dtype=np.complex128)
    for i, p in enumerate(ctx.atom_projections):
        if mask >> i & 1:
            out += p
    return HermitianOperator("P{" + ",".join(ctx.space.labels(mask)) + "}", out)


def operator_from_values(ctx: QuantumContext, values: Sequence[float], name: str = "B") -> HermitianOperator:
    """``sum_i values[i] * P_atom_i``: the operator with prescribed atom eigenvalues."""
    if len(values) != len(ctx.atoms):
        raise SpaceMismatchError(f"expected {len(ctx.atoms)} values, got {len(values)}")
    out = np.zeros((ctx.dim, ctx.dim), dtype=np.complex128)
    for v, p in zip(values, ctx.atom_projections):
        out += float(v) * p
    return HermitianOperator(name, out)


# ---------------------------------------------------------------------------
# states and the Born measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    allow_unnormalized: bool = False
    tol: float = 1e-10

    def __post_init__(self):
        h = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if h.size == 0 or not np.all(np.isfinite(h)):
            raise QVSetsError("state amplitudes must be finite and nonempty")
        if not self.allow_unnormalized and abs(float(np.linalg.norm(h)) - 1.0) > self.tol:
            raise QVSetsError(f"state has norm {np.linalg.norm(h):.12g}, expected 1")
        h.setflags(write=False)
        object.__setattr__(self, "amplitudes", h)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, amplitudes: Iterable[complex]) -> "StateVector":
        h = np.asarray(list(amplitudes), dtype=np.complex128)
        return cls(h / np.linalg.norm(h))


def born_measure(ctx: QuantumContext, h: StateVector, atoms) -> float:
    """``||P_U h||^2`` for the open ``U`` of atoms."""
    if h.dim != ctx.dim:
        raise SpaceMismatchError(f"state has dim {h.dim}, context has {ctx.dim}")
    mask = ctx.mask_of(atoms)
    total = 0.0
    for i, a in enumerate(ctx.atoms):
        if mask >> i & 1:
            c = a.basis.conj().T @ h.amplitudes
            total += float(np.vdot(c, c).real)
    return total


# ---------------------------------------------------------------------------
# random families for tests and self-checks
# ---------------------------------------------------------------------------


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_family(rng: np.random.Generator, n: int, k: int = 2, *, levels: int | None = None,
                  unitary: np.ndarray | None = None) -> list[HermitianOperator]:
    """``k`` commuting Hermitian ``n``x``n`` matrices sharing a random eigenbasis.

    With ``levels`` set, eigenvalues are drawn from that many integers so
    that degeneracies are common.
    """
    u = random_unitary(rng, n) if unitary is None else unitary
    ops = []
    for j in range(k):
        if levels is None:
            w = rng.uniform(-3.0, 3.0, n)
        else:
            w = rng.integers(-levels // 2, levels - levels // 2, n).astype(float)
        ops.append(HermitianOperator(chr(ord("A") + j), (u * w) @ u.conj().T))
    return ops


def random_state(rng: np.random.Generator, n: int) -> StateVector:
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return StateVector.normalized(z)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _complex_matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise QVSetsError(f"{where}: expected a nonempty list of rows")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(rows):
            raise QVSetsError(f"{where}/{i}: expected a row of length {len(rows)}")
        out.append([_complex(e, f"{where}/{i}/{j}") for j, e in enumerate(row)])
    return np.array(out, dtype=np.complex128)


def _complex(e, where: str) -> complex:
    if isinstance(e, (int, float)) and not isinstance(e, bool):
        return complex(e)
    if isinstance(e, list) and len(e) == 2 and all(isinstance(x, (int, float)) for x in e):
        return complex(e[0], e[1])
    raise QVSetsError(f"{where}: expected [re, im] or a real number")


def observables_from_json(data: dict, tol_herm: float = DEFAULT_TOL.herm) -> list[HermitianOperator]:
    """Parse ``{"dim": n, "operators": [{"name": ..., "matrix": [[[re, im], ...], ...]}]}``.

    Diagnostics carry JSON pointers to the offending entry.
    """
    if not isinstance(data, dict):
        raise QVSetsError("/: expected an object")
    ops_data = data.get("operators")
    if not isinstance(ops_data, list) or not ops_data:
        raise QVSetsError("/operators: expected a nonempty list")
    dim = data.get("dim")
    ops = []
    for k, entry in enumerate(ops_data):
        where = f"/operators/{k}"
        if not isinstance(entry, dict) or "matrix" not in entry:
            raise QVSetsError(f"{where}: expected an object with a matrix")
        m = _complex_matrix(entry["matrix"], f"{where}/matrix")
        if dim is not None and m.shape[0] != dim:
            raise QVSetsError(f"{where}/matrix: dimension {m.shape[0]} does not match /dim = {dim}")
        try:
            ops.append(HermitianOperator(str(entry.get("name", f"A{k}")), m, tol=tol_herm))
        except NotHermitianError as e:
            raise NotHermitianError(f"{where}/matrix: {e}") from None
    return ops


def observables_to_json(ops: Sequence[HermitianOperator]) -> dict:
    return {"dim": ops[0].dim,
            "operators": [{"name": o.name, "matrix": _matrix_json(o.matrix)} for o in ops]}


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def state_from_json(data: dict, *, allow_unnormalized: bool = False) -> StateVector:
    amps = data.get("amplitudes") if isinstance(data, dict) else None
    if not isinstance(amps, list) or not amps:
        raise QVSetsError("/amplitudes: expected a nonempty list")
    return StateVector(np.array([_complex(a, f"/amplitudes/{i}") for i, a in enumerate(amps)]),
                       allow_unnormalized=allow_unnormalized)


def context_to_json(ctx: QuantumContext, digits: int = 12) -> dict:
    return {
        "dim": ctx.dim,
        "operators": [o.name for o in ctx.family],
        "atoms": [{"label": a.label, "multiplicity": a.multiplicity,
                   "character": {o.name: round(c, digits) + 0.0 for o, c in zip(ctx.family, a.character)}}
                  for a in ctx.atoms],
        "space": ctx.space.to_json() if len(ctx.atoms) <= 12 else {"points": list(ctx.space.points),
                                                                     "discrete": True},
    }

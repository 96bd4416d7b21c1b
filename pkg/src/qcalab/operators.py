"""Dense operators on a finite cell register: application, partial traces,
Heisenberg images, minimal-support extraction, Hermitian exponentials and
trace distance. Everything is plain numpy; sizes are capped by RingSpace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import RingSpace

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-10
SUPPORT_TOL = 1e-10


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, DenseOperator) else np.asarray(op)


@dataclass(frozen=True)
class DenseOperator:
    """Complex square matrix over the full Hilbert space of a cell register."""

    ring: RingSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.ring.dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match ring dimension {self.ring.dim}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.ring.dim

    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.ring, self.matrix.conj().T)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        if self.ring != other.ring:
            raise ValueError("operator ring mismatch")
        return DenseOperator(self.ring, self.matrix @ other.matrix)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on a cell subset."""

    matrix: np.ndarray = field(repr=False)
    cells: tuple = ()
    local_dim: int = 2

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        herm = np.linalg.norm(m - m.conj().T)
        if herm > HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: defect {herm:.3e}")
        tr = np.trace(m)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr} is not 1")
        low = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        if low < -1e-10:
            raise ValueError(f"density matrix has negative eigenvalue {low:.3e}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def identity_operator(ring: RingSpace) -> DenseOperator:
    return DenseOperator(ring, np.eye(ring.dim, dtype=np.complex128))


def apply(op: DenseOperator, vector: np.ndarray) -> np.ndarray:
    """Matrix-vector product; preserves the norm when `op` is unitary."""
    v = np.asarray(vector, dtype=np.complex128)
    if v.shape != (op.dim,):
        raise ValueError(f"vector length {v.shape} does not match operator dimension {op.dim}")
    return op.matrix @ v


def unitarity_defect(op) -> float:
    """Frobenius norm of op^dag op - I."""
    m = _as_matrix(op)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


def hermiticity_defect(op) -> float:
    m = _as_matrix(op)
    return float(np.linalg.norm(m - m.conj().T))


def density_from_vector(vector: np.ndarray, ring: RingSpace) -> DensityMatrix:
    v = np.asarray(vector, dtype=np.complex128)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector has no density matrix")
    v = v / n
    return DensityMatrix(np.outer(v, v.conj()), tuple(range(ring.cell_count)), ring.local_dim)


def reduced_density_from_vector(vector: np.ndarray, ring: RingSpace, keep) -> DensityMatrix:
    """Reduced state of a pure state on the cell subset `keep`, contracted
    directly from the vector (no full density matrix is materialized)."""
    keep = tuple(sorted(keep))
    n, d = ring.cell_count, ring.local_dim
    v = np.asarray(vector, dtype=np.complex128)
    if v.shape != (ring.dim,):
        raise ValueError(f"vector length {v.shape} does not match ring dimension {ring.dim}")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero vector has no reduced state")
    v = v / norm
    if not keep:
        return DensityMatrix(np.array([[1.0 + 0.0j]]), (), d)
    if any(not (0 <= k < n) for k in keep):
        raise ValueError(f"keep set {keep} outside cells 0..{n - 1}")
    t = v.reshape([d] * n)
    order = [i for i in range(n) if i not in keep] + list(keep)
    dk = d ** len(keep)
    flat = t.transpose(order).reshape(-1, dk)
    return DensityMatrix(flat.T @ flat.conj(), keep, d)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced density matrix on the cell subset `keep` (labels, kept in
    ascending order). Empty subset reduces to the 1x1 matrix [trace]."""
    keep = tuple(sorted(keep))
    labels = rho.cells
    if any(k not in labels for k in keep):
        raise ValueError(f"keep set {keep} not contained in cells {labels}")
    n = len(labels)
    d = rho.local_dim
    if not keep:
        return DensityMatrix(np.array([[np.trace(rho.matrix)]]), (), d)
    positions = [labels.index(k) for k in keep]
    t = rho.matrix.reshape([d] * (2 * n))
    subs = list(range(n))
    subs += [n + i if i in positions else i for i in range(n)]
    out = positions + [n + i for i in positions]
    reduced = np.einsum(t, subs, out)
    dk = d ** len(keep)
    return DensityMatrix(reduced.reshape(dk, dk), keep, d)


def heisenberg_image(g: DenseOperator, a: DenseOperator, support_hint=None) -> DenseOperator:
    """Conjugate an observable by a unitary step: g^dag a g.

    `support_hint` is accepted for callers that track expected localization;
    the dense computation does not need it. Non-unitary `g` is rejected.
    """
    defect = unitarity_defect(g)
    if defect > UNITARITY_TOL:
        raise ValueError(f"operator is not unitary: defect {defect:.3e}")
    if g.ring != a.ring:
        raise ValueError("operator ring mismatch")
    return DenseOperator(g.ring, g.matrix.conj().T @ a.matrix @ g.matrix)


def support_of(op: DenseOperator, tol: float = SUPPORT_TOL) -> tuple:
    """Minimal cell set outside of which `op` acts as the identity.

    A cell belongs to the support iff some commutator of `op` with a matrix
    unit at that cell has Frobenius norm above `tol`. The commutator norms
    with all d^2 matrix units are evaluated blockwise from a single
    cell-major reshape, which is exactly the commutator test without
    materializing each product.
    """
    n = op.ring.cell_count
    d = op.ring.local_dim
    dim = op.dim
    support = []
    t = op.matrix.reshape([d] * (2 * n))
    for cell in range(n):
        # pull the cell's row/column axes to the front: B[r_c, c_c, R, C]
        order = [cell] + [n + cell] + [i for i in range(2 * n) if i not in (cell, n + cell)]
        b = np.transpose(t, order).reshape(d, d, dim // d, dim // d)
        block_sq = np.einsum("ijkl,ijkl->ij", b, b.conj()).real
        nontrivial = False
        for i in range(d):
            if nontrivial:
                break
            for j in range(d):
                # || [op, E_ij at cell] ||_F^2 expanded over the cell blocks
                diag = np.linalg.norm(b[i, i] - b[j, j]) ** 2
                col = float(np.sum(block_sq[:, i])) - block_sq[i, i]
                row = float(np.sum(block_sq[j, :])) - block_sq[j, j]
                if diag + col + row > tol * tol:
                    nontrivial = True
                    break
        if nontrivial:
            support.append(cell)
    return tuple(support)


def hermitian_eig(h) -> tuple:
    """Eigendecomposition of a Hermitian matrix with a deterministic
    eigenvector phase convention: first nonzero component positive real."""
    m = _as_matrix(h)
    w, v = np.linalg.eigh(m)
    for k in range(v.shape[1]):
        col = v[:, k]
        mags = np.abs(col)
        nz = np.nonzero(mags > 1e-12 * mags.max())[0]
        lead = col[nz[0]]
        v[:, k] = col * (abs(lead) / lead)
    return w, v


def hermitian_exp(h, t: float):
    """Unitary exp(-i t h) for Hermitian h, via eigendecomposition.

    Returns the same container kind as the input (DenseOperator or ndarray).
    """
    m = _as_matrix(h)
    defect = float(np.linalg.norm(m - m.conj().T))
    if defect > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian: defect {defect:.3e}")
    w, v = hermitian_eig(m)
    u = (v * np.exp(-1j * t * w)) @ v.conj().T
    if isinstance(h, DenseOperator):
        return DenseOperator(h.ring, u)
    return u


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the sum of absolute eigenvalues of rho - sigma; in [0, 1]."""
    if rho.matrix.shape != sigma.matrix.shape:
        raise ValueError("density matrix dimension mismatch")
    diff = rho.matrix - sigma.matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def spectral_norm(op, rtol: float = 1e-8, max_iter: int = 20000) -> float:
    """Largest singular value by power iteration on A^dag A.

    Deterministic start vector; `rtol` is the relative tolerance on
    successive estimates.
    """
    a = _as_matrix(op)
    n = a.shape[1]
    v = np.arange(1.0, n + 1.0) / np.linalg.norm(np.arange(1.0, n + 1.0))
    v = v.astype(np.complex128)
    est = 0.0
    for _ in range(max_iter):
        y = a @ v
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        v = a.conj().T @ y
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return new
        v = v / nv
        if abs(new - est) <= rtol * max(new, 1e-300):
            return new
        est = new
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


def op_at(ring: RingSpace, cell: int, local: np.ndarray) -> DenseOperator:
    """Single-cell operator: `local` at `cell`, identity elsewhere."""
    d = ring.local_dim
    local = np.asarray(local, dtype=np.complex128)
    if local.shape != (d, d):
        raise ValueError(f"local matrix must be {d}x{d}")
    if not (0 <= cell < ring.cell_count):
        raise ValueError(f"cell {cell} outside ring of {ring.cell_count} cells")
    m = np.kron(
        np.eye(d**cell),
        np.kron(local, np.eye(d ** (ring.cell_count - cell - 1))),
    )
    return DenseOperator(ring, m)


def matrix_units(d: int):
    """The d^2 matrix units, a complete single-cell operator basis."""
    units = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            units.append(e)
    return units


def translation_operator(ring: RingSpace) -> DenseOperator:
    """One-cell cyclic translation: content of cell i+1 moves to cell i."""
    dim = ring.dim
    p = np.zeros((dim, dim), dtype=np.complex128)
    for idx in range(dim):
        symbols = ring.symbols_of(idx)
        rotated = symbols[1:] + symbols[:1]
        p[ring.index_of(rotated), idx] = 1.0
    return DenseOperator(ring, p)


def tensor_state(ring: RingSpace, factors) -> np.ndarray:
    """Assemble a full-register vector from factors on disjoint cell groups.

    `factors` is a list of (cells, vector) pairs whose cell groups partition
    the register; each vector is indexed mixed-radix over its own cells.
    """
    d = ring.local_dim
    cells_order = []
    full = np.array([1.0 + 0.0j])
    for cells, vec in factors:
        cells = tuple(cells)
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.shape != (d ** len(cells),):
            raise ValueError(f"factor on cells {cells} has wrong length {vec.shape}")
        cells_order.extend(cells)
        full = np.kron(full, vec)
    if sorted(cells_order) != list(range(ring.cell_count)):
        raise ValueError(f"factors do not partition the register: {sorted(cells_order)}")
    src = [cells_order.index(c) for c in range(ring.cell_count)]
    return full.reshape([d] * ring.cell_count).transpose(src).reshape(-1)


def format_matrix(op, digits: int = 6) -> str:
    """Row-major `re+imi` debug rendering."""
    m = _as_matrix(op)
    rows = []
    for row in m:
        rows.append(" ".join(f"{z.real:+.{digits}g}{z.imag:+.{digits}g}i" for z in row))
    return "\n".join(rows)

"""Exact-diagonalization reference energies at desk scale.

Ground energies are computed either over the full computational basis or
restricted to a symmetry sector: dense diagonalization below a dimension
cutoff, otherwise a matrix-free restarted Lanczos iteration with full
reorthogonalization driven by the sparse Hamiltonian columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliTerm, QubitHamiltonian
from .physicality import PhysicalityOracle
from .symmetry import SymmetryEnsemble

DENSE_CUTOFF = 2048
DIMENSION_CAP = 2**18


@dataclass
class SectorBasis:
    """Ordered in-sector basis vectors with integer position lookup."""

    vectors: np.ndarray  # uint64, lexicographic in the qubit-0-first rendering

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.uint64)
        self._sorted = np.sort(self.vectors)
        self._perm = np.argsort(self.vectors, kind="stable")
        if len(self._sorted) > 1 and (self._sorted[1:] == self._sorted[:-1]).any():
            raise ValueError("basis vectors must be distinct")

    def __len__(self):
        return len(self.vectors)

    @classmethod
    def from_ensemble(cls, ensemble: SymmetryEnsemble) -> "SectorBasis":
        oracle = PhysicalityOracle(ensemble)
        return cls(np.array(oracle.sector_vectors(), dtype=np.uint64))

    @classmethod
    def full_space(cls, n_qubits: int) -> "SectorBasis":
        if n_qubits > 24:
            raise ValueError("full-space basis beyond 24 qubits is not desk scale")
        return cls(np.arange(2**n_qubits, dtype=np.uint64))

    def positions(self, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Positions of ``targets`` in the basis; second array flags members."""
        targets = np.asarray(targets, dtype=np.uint64)
        loc = np.searchsorted(self._sorted, targets)
        loc = np.minimum(loc, len(self._sorted) - 1)
        found = self._sorted[loc] == targets
        return self._perm[loc], found

    def index_of(self, x: int) -> int:
        pos, found = self.positions(np.array([x], dtype=np.uint64))
        if not found[0]:
            raise KeyError(f"{x:#x} not in basis")
        return int(pos[0])


def _dense_matrix(h: QubitHamiltonian, basis: SectorBasis) -> np.ndarray:
    dim = len(basis)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    targets, amps = h.column_amplitudes(basis.vectors)
    pos, found = basis.positions(targets.ravel())
    pos = pos.reshape(targets.shape)
    found = found.reshape(targets.shape)
    for col in range(dim):
        sel = found[col]
        np.add.at(mat[:, col], pos[col][sel], amps[col][sel])
    mat[np.diag_indices(dim)] += h.constant_offset
    return mat


class _SectorMatvec:
    """Matrix-free y = H v over a sector basis, columns applied groupwise."""

    def __init__(self, h: QubitHamiltonian, basis: SectorBasis):
        self.h = h
        self.basis = basis
        group_flips, _, _, _ = h.flip_groups()
        # precompute per-group target positions and amplitudes when modest
        self._cached = len(basis) * len(group_flips) <= 5_000_000
        if self._cached:
            targets, amps = h.column_amplitudes(basis.vectors)
            pos, found = basis.positions(targets.ravel())
            self._pos = pos.reshape(targets.shape)
            self._found = found.reshape(targets.shape)
            self._amps = amps

    def __call__(self, v: np.ndarray) -> np.ndarray:
        basis = self.basis
        y = self.h.constant_offset * v.astype(np.complex128)
        if self._cached:
            pos, found, amps = self._pos, self._found, self._amps
        else:
            targets, amps = self.h.column_amplitudes(basis.vectors)
            pos, found = basis.positions(targets.ravel())
            pos = pos.reshape(targets.shape)
            found = found.reshape(targets.shape)
        for g in range(amps.shape[1]):
            sel = found[:, g]
            np.add.at(y, pos[sel, g], amps[sel, g] * v[sel])
        return y


def _lanczos_min(matvec, dim: int, tol: float = 1e-10, seed: int = 7,
                 krylov: int = 40, max_restarts: int = 500) -> float:
    """Smallest eigenvalue by restarted Lanczos with full reorthogonalization."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0xED))))
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    m = min(krylov, dim)
    for _ in range(max_restarts):
        basis = np.zeros((m, dim), dtype=np.complex128)
        alphas: list[float] = []
        betas: list[float] = []
        basis[0] = v
        for j in range(m):
            w = matvec(basis[j])
            alphas.append(float(np.vdot(basis[j], w).real))
            w = w - alphas[-1] * basis[j]
            if j > 0:
                w = w - betas[-1] * basis[j - 1]
            # full reorthogonalization, twice for numerical safety
            for _pass in range(2):
                w = w - basis[: j + 1].T @ (np.conj(basis[: j + 1]) @ w)
            norm = float(np.linalg.norm(w))
            if j + 1 == m or norm < 1e-14:
                if norm < 1e-14:
                    alphas = alphas[: j + 1]
                    betas = betas[:j]
                break
            betas.append(norm)
            basis[j + 1] = w / norm
        k = len(alphas)
        tri = np.diag(np.asarray(alphas))
        if k > 1:
            off = np.asarray(betas[: k - 1])
            tri += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(tri)
        theta = float(evals[0])
        x = evecs[:, 0] @ basis[:k]
        x /= np.linalg.norm(x)
        residual = float(np.linalg.norm(matvec(x) - theta * x))
        if residual <= tol * max(1.0, abs(theta)):
            return theta
        v = x
    raise RuntimeError(f"Lanczos did not converge to residual {tol} in {max_restarts} restarts")


def ground_energy(h: QubitHamiltonian, ensemble: SymmetryEnsemble | None = None, *,
                  dense_cutoff: int = DENSE_CUTOFF, dimension_cap: int = DIMENSION_CAP,
                  tol: float = 1e-10, seed: int = 7) -> float:
    """Lowest eigenvalue of H, optionally restricted to a symmetry sector.

    The constant offset is included.  Raises ``ValueError`` when the
    (sector) dimension exceeds ``dimension_cap``.
    """
    if ensemble is not None and ensemble.n_qubits != h.n_qubits:
        raise ValueError("Hamiltonian and ensemble disagree on qubit count")
    if ensemble is None:
        dim = 2**h.n_qubits
        if dim > dimension_cap:
            raise ValueError(f"full space dimension {dim} exceeds cap {dimension_cap}")
        basis = SectorBasis.full_space(h.n_qubits)
    else:
        basis = SectorBasis.from_ensemble(ensemble)
        if len(basis) > dimension_cap:
            raise ValueError(f"sector dimension {len(basis)} exceeds cap {dimension_cap}")
    dim = len(basis)
    if dim == 1:
        x = int(basis.vectors[0])
        from .pauli import connected_configurations

        return float(connected_configurations(h, x).get(x, 0.0).real)
    if dim < dense_cutoff:
        mat = _dense_matrix(h, basis)
        return float(np.linalg.eigvalsh(mat)[0])
    return _lanczos_min(_SectorMatvec(h, basis), dim, tol=tol, seed=seed)


def sector_dimension(ensemble: SymmetryEnsemble) -> int:
    return PhysicalityOracle(ensemble).sector_size


def build_heisenberg(n_qubits: int, coupling: float = 1.0,
                     periodic: bool = False) -> QubitHamiltonian:
    """Nearest-neighbour spin-1/2 Heisenberg chain J * sum S_i . S_j.

    Each bond contributes (J/4)(XX + YY + ZZ).
    """
    if n_qubits < 2:
        raise ValueError("chain needs at least two sites")
    bonds = [(i, i + 1) for i in range(n_qubits - 1)]
    if periodic and n_qubits > 2:
        bonds.append((n_qubits - 1, 0))
    terms = []
    for a, b in bonds:
        for letter in "XYZ":
            label = "".join(
                letter if q in (a, b) else "I" for q in range(n_qubits)
            )
            terms.append(PauliTerm(coupling / 4.0, label))
    return QubitHamiltonian(n_qubits, terms)


__all__ = [
    "SectorBasis",
    "ground_energy",
    "sector_dimension",
    "build_heisenberg",
    "DENSE_CUTOFF",
    "DIMENSION_CAP",
]

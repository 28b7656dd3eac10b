"""Quantum number symmetries diagonal in the computational basis.

A symmetry here is an operator whose eigenvalue on a basis vector is a
composition of per-qubit local values: additive symmetries compose by
integer addition, multiplicative (Z-type) ones by addition mod 2, where the
parity p encodes the operator eigenvalue (-1)^p.  All eigenvalues are kept
integral (spin projection and magnetization are stored doubled) so partial
eigenvalues can serve as exact lookup keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import popcount

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


@dataclass
class SymmetryDescriptor:
    """Per-qubit local eigenvalues plus the composition rule.

    ``local_values[i, b]`` is the contribution of qubit ``i`` taking bit
    value ``b``.  ``ref`` is the target eigenvalue of the sector this
    descriptor should be pinned to; it may be left unset and filled in
    later (see :func:`fix_sector`).
    """

    name: str
    kind: str
    local_values: np.ndarray
    ref: int | None = None

    def __post_init__(self):
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        self.local_values = np.asarray(self.local_values, dtype=np.int64)
        if self.local_values.ndim != 2 or self.local_values.shape[1] != 2:
            raise ValueError("local_values must have shape (n_qubits, 2)")
        if self.kind == MULTIPLICATIVE and not np.isin(self.local_values, (0, 1)).all():
            raise ValueError("multiplicative local values must be parity bits")

    @property
    def n_qubits(self) -> int:
        return self.local_values.shape[0]

    def compose(self, a, b):
        if self.kind == ADDITIVE:
            return a + b
        return (a + b) & 1 if isinstance(a, (int, np.integer)) else (a + b) % 2

    def local(self, i: int, b: int) -> int:
        return int(self.local_values[i, b])

    def eval_prefix(self, x: int, n_bits: int) -> int:
        """Partial eigenvalue of the first ``n_bits`` qubits of ``x``."""
        s = 0
        for i in range(n_bits):
            s += self.local(i, (x >> i) & 1)
        return s & 1 if self.kind == MULTIPLICATIVE else s

    def eval_full(self, x: int) -> int:
        return self.eval_prefix(x, self.n_qubits)

    def eval_full_batch(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`eval_full` over uint64 basis vectors."""
        xs = np.asarray(xs, dtype=np.uint64)
        lam = self.local_values
        # sum = sum_i lam[i,0] + sum_{i: bit set} (lam[i,1] - lam[i,0])
        base = int(lam[:, 0].sum())
        diff = lam[:, 1] - lam[:, 0]
        out = np.full(len(xs), base, dtype=np.int64)
        for i in np.nonzero(diff)[0]:
            out += int(diff[i]) * ((xs >> np.uint64(i)) & np.uint64(1)).astype(np.int64)
        return out & 1 if self.kind == MULTIPLICATIVE else out

    def prefix_min_max(self) -> tuple[int, int]:
        """Extreme partial eigenvalues over every level and prefix."""
        if self.kind == MULTIPLICATIVE:
            return 0, 1
        lo = hi = 0
        run_lo = run_hi = 0
        for i in range(self.n_qubits):
            run_lo += int(self.local_values[i].min())
            run_hi += int(self.local_values[i].max())
            lo = min(lo, run_lo)
            hi = max(hi, run_hi)
        return lo, hi

    @property
    def spectrum_size(self) -> int:
        lo, hi = self.prefix_min_max()
        return hi - lo + 1


def particle_number(n_qubits: int, n_electrons: int) -> SymmetryDescriptor:
    """Total occupation; the eigenvalue of x is its popcount."""
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"n_electrons {n_electrons} outside [0, {n_qubits}]")
    lam = np.tile([0, 1], (n_qubits, 1))
    return SymmetryDescriptor("particle_number", ADDITIVE, lam, ref=n_electrons)


def spin_projection(n_qubits: int, ref: int | None = None) -> SymmetryDescriptor:
    """Twice the total spin projection of an interleaved spin-orbital register.

    Qubits at even 0-based positions carry spin up (+1 per occupation),
    odd positions spin down (-1); the eigenvalue is stored doubled so it
    stays integral.
    """
    if n_qubits % 2:
        raise ValueError("spin projection needs an even number of spin-orbitals")
    lam = np.zeros((n_qubits, 2), dtype=np.int64)
    lam[0::2, 1] = 1
    lam[1::2, 1] = -1
    return SymmetryDescriptor("spin_projection", ADDITIVE, lam, ref=ref)


def magnetization(n_qubits: int, ref: int | None = None) -> SymmetryDescriptor:
    """Twice the total magnetization of a spin-1/2 chain (0 is up, 1 is down)."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    lam = np.tile([1, -1], (n_qubits, 1))
    return SymmetryDescriptor("magnetization", ADDITIVE, lam, ref=ref)


def z2_descriptor(mask: int, n_qubits: int, ref: int | None = None) -> SymmetryDescriptor:
    """Parity of the occupation restricted to the masked qubits.

    The stored eigenvalue is the parity bit p; the underlying Z-string
    operator has eigenvalue (-1)^p.
    """
    if mask == 0:
        raise ValueError("Z-string mask must be nonzero")
    if mask >> n_qubits:
        raise ValueError(f"mask {mask:#x} has bits beyond qubit {n_qubits - 1}")
    lam = np.zeros((n_qubits, 2), dtype=np.int64)
    for i in range(n_qubits):
        if (mask >> i) & 1:
            lam[i, 1] = 1
    from .pauli import mask_to_zstring

    return SymmetryDescriptor(f"z2_{mask_to_zstring(mask, n_qubits)}", MULTIPLICATIVE, lam, ref=ref)


@dataclass
class SymmetryEnsemble:
    """Ordered symmetry descriptors plus the target sector eigenvalues."""

    descriptors: list[SymmetryDescriptor]
    s_ref: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.descriptors:
            raise ValueError("ensemble needs at least one descriptor")
        ns = {d.n_qubits for d in self.descriptors}
        if len(ns) != 1:
            raise ValueError(f"descriptors disagree on qubit count: {sorted(ns)}")
        if not self.s_ref:
            refs = [d.ref for d in self.descriptors]
            if any(r is None for r in refs):
                missing = [d.name for d, r in zip(self.descriptors, refs) if r is None]
                raise ValueError(f"descriptors without reference eigenvalue: {missing}")
            self.s_ref = tuple(int(r) for r in refs)
        else:
            self.s_ref = tuple(int(r) for r in self.s_ref)
        if len(self.s_ref) != len(self.descriptors):
            raise ValueError("s_ref length must match descriptor count")
        for d, r in zip(self.descriptors, self.s_ref):
            if d.kind == MULTIPLICATIVE and r not in (0, 1):
                raise ValueError(f"{d.name}: multiplicative reference must be a parity bit")

    @property
    def n_qubits(self) -> int:
        return self.descriptors[0].n_qubits

    @property
    def n_symmetries(self) -> int:
        return len(self.descriptors)

    def eval(self, x: int) -> tuple[int, ...]:
        return tuple(d.eval_full(x) for d in self.descriptors)

    def eval_batch(self, xs: np.ndarray) -> np.ndarray:
        """(len(xs), n_symmetries) matrix of full eigenvalues."""
        return np.stack([d.eval_full_batch(xs) for d in self.descriptors], axis=1)

    def in_sector(self, x: int) -> bool:
        return self.eval(x) == self.s_ref

    def in_sector_batch(self, xs: np.ndarray) -> np.ndarray:
        vals = self.eval_batch(xs)
        ref = np.asarray(self.s_ref, dtype=np.int64)
        return (vals == ref[None, :]).all(axis=1)


def fix_sector(descriptors: list[SymmetryDescriptor], x_ref: int) -> SymmetryEnsemble:
    """Pin every descriptor's reference to its eigenvalue on ``x_ref``."""
    refs = tuple(d.eval_full(x_ref) for d in descriptors)
    return SymmetryEnsemble(descriptors, refs)


def check_hamiltonian_compatibility(h, ensemble: SymmetryEnsemble, n_probes: int = 1000,
                                    seed: int = 0) -> None:
    """Empirical check that H maps each sector into itself.

    Draws random basis vectors and asserts that every connected
    configuration shares their eigenvalue vector; raises ``ValueError``
    on the first violation.
    """
    from .pauli import connected_configurations

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0x5EC))))
    n = h.n_qubits
    for _ in range(n_probes):
        x = int(rng.integers(0, 2**n))
        s_x = ensemble.eval(x)
        for xp in connected_configurations(h, x):
            if ensemble.eval(xp) != s_x:
                raise ValueError(
                    f"Hamiltonian couples across symmetry sectors: "
                    f"s({x:#x}) = {s_x}, s({xp:#x}) = {ensemble.eval(xp)}"
                )


__all__ = [
    "ADDITIVE",
    "MULTIPLICATIVE",
    "SymmetryDescriptor",
    "SymmetryEnsemble",
    "particle_number",
    "spin_projection",
    "magnetization",
    "z2_descriptor",
    "fix_sector",
    "check_hamiltonian_compatibility",
]

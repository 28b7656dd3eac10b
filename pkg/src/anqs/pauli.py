"""Pauli-string algebra for qubit Hamiltonians.

A Hamiltonian is a weighted sum of N-qubit Pauli strings plus a real
constant (the coefficient of the identity string).  This module provides
the action of terms on computational basis vectors, the sparse column
H[:, x] of the Hamiltonian matrix, discovery of diagonal Z-type symmetries,
and JSON serialization.

Qubit indexing is 0-based internally; the JSON format and all rendered
strings put qubit 0 at position 0 (leftmost).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bits import format_bits, popcount

PAULI_LETTERS = "IXYZ"

#: coefficients (and aggregated matrix elements) below this are dropped
DROP_THRESHOLD = 1e-12

#: largest imaginary part tolerated in an aggregated Hermitian coefficient
HERMITICITY_TOL = 1e-10


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string; ``letters[i]`` acts on qubit ``i``."""

    coefficient: complex
    letters: str

    def __post_init__(self):
        bad = set(self.letters) - set(PAULI_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def support_mask(self, chars: str) -> int:
        """Bit mask of qubit positions whose letter is in ``chars``."""
        m = 0
        for i, c in enumerate(self.letters):
            if c in chars:
                m |= 1 << i
        return m


def apply_term(term: PauliTerm, x: int, n_qubits: int | None = None) -> tuple[int, complex]:
    """Action of a weighted Pauli string on a basis vector.

    Returns ``(x', amplitude)`` with ``amplitude = <x'|P|x>``: X and Y flip
    the bit they act on, Z contributes (-1)^bit, and Y contributes the phase
    of Y|0> = i|1>, Y|1> = -i|0>.
    """
    if n_qubits is not None and n_qubits != term.n_qubits:
        raise ValueError(f"term acts on {term.n_qubits} qubits, vector has {n_qubits}")
    if x >> term.n_qubits:
        raise ValueError(f"basis vector {x:#x} has bits beyond qubit {term.n_qubits - 1}")
    amp = complex(term.coefficient)
    out = x
    for i, c in enumerate(term.letters):
        b = (x >> i) & 1
        if c == "Z":
            if b:
                amp = -amp
        elif c == "X":
            out ^= 1 << i
        elif c == "Y":
            out ^= 1 << i
            amp *= 1j if b == 0 else -1j
    return out, amp


@dataclass
class QubitHamiltonian:
    """Canonicalized weighted sum of Pauli strings plus a real constant.

    Construction merges duplicate letter sequences, folds identity strings
    into ``constant_offset``, drops terms below ``drop_threshold`` and
    rejects aggregated coefficients with a non-negligible imaginary part
    (the Hamiltonian must be Hermitian).
    """

    n_qubits: int
    terms: list[PauliTerm]
    constant_offset: float = 0.0
    drop_threshold: float = DROP_THRESHOLD
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n_qubits <= 0:
            raise ValueError("n_qubits must be positive")
        merged: dict[str, complex] = {}
        constant = complex(self.constant_offset)
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError(f"term {t.letters!r} does not act on {self.n_qubits} qubits")
            if set(t.letters) <= {"I"}:
                constant += complex(t.coefficient)
            else:
                merged[t.letters] = merged.get(t.letters, 0j) + complex(t.coefficient)
        if abs(constant.imag) > HERMITICITY_TOL:
            raise ValueError(f"constant offset has imaginary part {constant.imag}")
        out = []
        for letters in sorted(merged):
            c = merged[letters]
            if abs(c) < self.drop_threshold:
                continue
            if abs(c.imag) > HERMITICITY_TOL:
                raise ValueError(f"non-Hermitian aggregated coefficient {c} for {letters!r}")
            out.append(PauliTerm(complex(c.real, 0.0), letters))
        self.terms = out
        self.constant_offset = float(constant.real)
        self._tables = {}

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def _term_tables(self):
        """Per-term masks for vectorized application, built once."""
        tab = self._tables.get("terms")
        if tab is None:
            flips = np.zeros(self.n_terms, dtype=np.uint64)
            phase_masks = np.zeros(self.n_terms, dtype=np.uint64)
            pref = np.zeros(self.n_terms, dtype=np.complex128)
            for k, t in enumerate(self.terms):
                xm = t.support_mask("XY")
                ym = t.support_mask("Y")
                zm = t.support_mask("Z")
                flips[k] = xm
                phase_masks[k] = ym | zm
                pref[k] = t.coefficient * (1j) ** (bin(ym).count("1") % 4)
            tab = (flips, phase_masks, pref)
            self._tables["terms"] = tab
        return tab

    def flip_groups(self):
        """Terms grouped by their X/Y flip mask.

        Returns ``(group_flips, starts, phase_masks, prefactors)`` where terms
        of group ``g`` occupy the slice ``starts[g]:starts[g+1]`` of the two
        trailing arrays.  Grouping lets callers aggregate all terms that
        connect ``x`` to the same ``x'`` in one pass.
        """
        tab = self._tables.get("groups")
        if tab is None:
            flips, phase_masks, pref = self._term_tables()
            order = np.argsort(flips, kind="stable")
            flips = flips[order]
            group_flips, starts = np.unique(flips, return_index=True)
            starts = np.append(starts, len(flips))
            tab = (group_flips, starts, phase_masks[order], pref[order])
            self._tables["groups"] = tab
        return tab

    def column_amplitudes(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized sparse columns H[:, x] for a batch of basis vectors.

        Returns ``(targets, amps)`` of shape (len(xs), n_groups): entry
        ``[k, g]`` is the connected configuration ``xs[k] ^ flip_g`` and its
        aggregated amplitude ``<target|H|xs[k]>``.  The constant offset is
        NOT included; callers add it to the diagonal themselves.
        """
        group_flips, starts, phase_masks, pref = self.flip_groups()
        xs = np.asarray(xs, dtype=np.uint64)
        targets = xs[:, None] ^ group_flips[None, :]
        amps = np.empty((len(xs), len(group_flips)), dtype=np.complex128)
        for g in range(len(group_flips)):
            sl = slice(starts[g], starts[g + 1])
            signs = 1.0 - 2.0 * (popcount(xs[:, None] & phase_masks[None, sl]) & 1)
            amps[:, g] = signs @ pref[sl]
        return targets, amps


def connected_configurations(h: QubitHamiltonian, x: int) -> dict[int, complex]:
    """Sparse column of the Hamiltonian matrix at basis vector ``x``.

    Maps each connected configuration ``x'`` to the aggregated matrix
    element ``<x'|H|x>``; the constant offset contributes to the diagonal
    entry.  Entries whose aggregate magnitude falls below the drop threshold
    (exact cancellations between terms) are omitted.
    """
    if x >> h.n_qubits:
        raise ValueError(f"basis vector {x:#x} has bits beyond qubit {h.n_qubits - 1}")
    targets, amps = h.column_amplitudes(np.array([x], dtype=np.uint64))
    entries: dict[int, complex] = {}
    for t, a in zip(targets[0], amps[0]):
        entries[int(t)] = complex(a)
    entries[x] = entries.get(x, 0j) + h.constant_offset
    return {t: a for t, a in entries.items() if abs(a) > h.drop_threshold}


# ---------------------------------------------------------------------------
# Z2 symmetry discovery: Z-strings commuting with every term
# ---------------------------------------------------------------------------


def _gf2_rref(rows: list[int], n_cols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over GF(2) with rows stored as bit masks.

    Returns ``(pivot_cols, pivot_rows)`` where ``pivot_rows[j]`` has leading
    bit ``pivot_cols[j]`` and is reduced against all other pivots.
    """
    pivot_cols: list[int] = []
    pivot_rows: list[int] = []
    for row in rows:
        for c, r in zip(pivot_cols, pivot_rows):
            if (row >> c) & 1:
                row ^= r
        if row == 0:
            continue
        col = (row & -row).bit_length() - 1
        # back-substitute into existing pivots to reach reduced form
        for j in range(len(pivot_rows)):
            if (pivot_rows[j] >> col) & 1:
                pivot_rows[j] ^= row
        pivot_cols.append(col)
        pivot_rows.append(row)
    order = np.argsort(pivot_cols)
    return [pivot_cols[j] for j in order], [pivot_rows[j] for j in order]


def discover_z2(h: QubitHamiltonian) -> list[int]:
    """Masks of all independent Z-strings commuting with the Hamiltonian.

    A Z-string with support mask ``m`` commutes with a Pauli term iff the
    overlap of ``m`` with the term's X/Y support has even parity, so the
    returned masks form a GF(2) basis of the nullspace of the X/Y-support
    matrix (one row per distinct term).  The identity (zero mask) is
    excluded.  Basis vectors are ordered by ascending free column, which is
    deterministic for a given Hamiltonian.
    """
    if h.n_terms == 0:
        raise ValueError("Hamiltonian has no terms")
    n = h.n_qubits
    supports = sorted({t.support_mask("XY") for t in h.terms} - {0})
    pivot_cols, pivot_rows = _gf2_rref(supports, n)
    pivot_set = set(pivot_cols)
    basis: list[int] = []
    for f in range(n):
        if f in pivot_set:
            continue
        v = 1 << f
        for c, r in zip(pivot_cols, pivot_rows):
            if (r >> f) & 1:
                v |= 1 << c
        basis.append(v)
    return basis


def mask_to_zstring(mask: int, n_qubits: int) -> str:
    """Render a Z-support mask as a string over {I, Z}, qubit 0 leftmost."""
    return "".join("Z" if (mask >> i) & 1 else "I" for i in range(n_qubits))


def zstring_to_mask(text: str) -> int:
    m = 0
    for i, c in enumerate(text):
        if c == "Z":
            m |= 1 << i
        elif c != "I":
            raise ValueError(f"invalid Z-string character {c!r} in {text!r}")
    return m


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def hamiltonian_to_dict(h: QubitHamiltonian) -> dict:
    return {
        "n_qubits": h.n_qubits,
        "constant": h.constant_offset,
        "terms": [
            {"coeff": [t.coefficient.real, t.coefficient.imag], "pauli": t.letters}
            for t in h.terms
        ],
    }


def hamiltonian_from_dict(data: dict) -> QubitHamiltonian:
    terms = [
        PauliTerm(complex(entry["coeff"][0], entry["coeff"][1]), entry["pauli"])
        for entry in data["terms"]
    ]
    return QubitHamiltonian(int(data["n_qubits"]), terms, float(data.get("constant", 0.0)))


def save_hamiltonian_json(h: QubitHamiltonian, path) -> None:
    with open(path, "w") as f:
        json.dump(hamiltonian_to_dict(h), f, indent=1)
        f.write("\n")


def load_hamiltonian_json(path) -> QubitHamiltonian:
    with open(path) as f:
        return hamiltonian_from_dict(json.load(f))


__all__ = [
    "PauliTerm",
    "QubitHamiltonian",
    "apply_term",
    "connected_configurations",
    "discover_z2",
    "mask_to_zstring",
    "zstring_to_mask",
    "hamiltonian_to_dict",
    "hamiltonian_from_dict",
    "save_hamiltonian_json",
    "load_hamiltonian_json",
    "format_bits",
]

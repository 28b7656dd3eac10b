"""Second-quantized molecular integrals and their qubit encoding.

Integrals are ingested from FCIDUMP text (chemist-notation two-body table
with 8-fold index symmetry), mapped onto an interleaved spin-orbital
register (spatial orbital p occupies qubits 2p and 2p+1 for spin up/down)
and encoded with the Jordan-Wigner substitution

    a_q = Z_0 ... Z_{q-1} (X_q + i Y_q) / 2,

which preserves the occupation-number reading of basis vectors.  The
resulting operator is

    H = sum_{pq,s} h_pq a+_{ps} a_{qs}
      + 1/2 sum_{pqrs,st} (pq|rs) a+_{ps} a+_{rt} a_{st} a_{qs} + E_core.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .pauli import PauliTerm, QubitHamiltonian

_SYMMETRY_TOL = 1e-10


@dataclass
class IntegralSet:
    """Spatial-orbital integral tables in chemist notation (Hartree)."""

    n_spatial: int
    n_electrons: int
    core_energy: float
    one_body: np.ndarray  # (M, M), h_pq
    two_body: np.ndarray  # (M, M, M, M), (pq|rs)

    def __post_init__(self):
        m = self.n_spatial
        if m < 1:
            raise ValueError("need at least one spatial orbital")
        if not 0 <= self.n_electrons <= 2 * m:
            raise ValueError(f"n_electrons {self.n_electrons} outside [0, {2 * m}]")
        self.one_body = np.asarray(self.one_body, dtype=np.float64)
        self.two_body = np.asarray(self.two_body, dtype=np.float64)
        if self.one_body.shape != (m, m) or self.two_body.shape != (m, m, m, m):
            raise ValueError("integral table shapes do not match n_spatial")
        if np.abs(self.one_body - self.one_body.T).max() > _SYMMETRY_TOL:
            raise ValueError("one-body integrals are not symmetric")
        g = self.two_body
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.abs(g - g.transpose(perm)).max() > _SYMMETRY_TOL:
                raise ValueError("two-body integrals violate chemist index symmetry")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial


class FcidumpError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def parse_fcidump(text: str) -> IntegralSet:
    """Parse FCIDUMP text into an :class:`IntegralSet`.

    The namelist header must define NORB and NELEC; ORBSYM/ISYM/MS2 are
    accepted and ignored.  Data lines read ``value i j k l`` with 1-based
    spatial indices: all-zero indices set the core energy, ``k = l = 0``
    sets a one-body element (and its transpose), anything else sets a
    two-body element along with all eight chemist-symmetry images.
    """
    lines = text.splitlines()
    header_end = None
    header_parts: list[str] = []
    for ln, raw in enumerate(lines, start=1):
        header_parts.append(raw)
        if re.search(r"&END|/", raw, flags=re.IGNORECASE):
            header_end = ln
            break
    if header_end is None:
        raise FcidumpError("no namelist terminator (&END or /) found")
    header = " ".join(header_parts)
    if not re.search(r"&FCI", header, flags=re.IGNORECASE):
        raise FcidumpError("missing &FCI namelist header", 1)

    def header_int(name: str) -> int:
        m = re.search(rf"{name}\s*=\s*(-?\d+)", header, flags=re.IGNORECASE)
        if m is None:
            raise FcidumpError(f"header does not define {name}", 1)
        return int(m.group(1))

    norb = header_int("NORB")
    nelec = header_int("NELEC")
    if norb < 1:
        raise FcidumpError(f"NORB must be positive, got {norb}", 1)

    core = 0.0
    one = np.zeros((norb, norb))
    two = np.zeros((norb, norb, norb, norb))
    for ln in range(header_end, len(lines)):
        raw = lines[ln].strip()
        if not raw:
            continue
        parts = raw.split()
        if len(parts) != 5:
            raise FcidumpError(f"expected 'value i j k l', got {raw!r}", ln + 1)
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"non-numeric field in {raw!r}", ln + 1) from exc
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FcidumpError(f"orbital index {idx} outside 0..{norb}", ln + 1)
        if i == j == k == l == 0:
            core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"one-body line with zero index: {raw!r}", ln + 1)
            one[i - 1, j - 1] = value
            one[j - 1, i - 1] = value
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"two-body line with zero index: {raw!r}", ln + 1)
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            ):
                two[a, b, c, d] = value
    return IntegralSet(norb, nelec, core, one, two)


def write_fcidump(ints: IntegralSet) -> str:
    """Serialize an integral set back to FCIDUMP text.

    Only one representative of each symmetry orbit is written; re-parsing
    reproduces the stored numeric content exactly.
    """
    m = ints.n_spatial
    out = [
        f"&FCI NORB={m},NELEC={ints.n_electrons},MS2=0,",
        " ORBSYM=" + ",".join(["1"] * m) + ",",
        " ISYM=1,",
        "&END",
    ]

    def fmt(value: float, i: int, j: int, k: int, l: int) -> str:
        return f" {float(value)!r} {i} {j} {k} {l}"

    seen = set()
    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    v = ints.two_body[p, q, r, s]
                    if v == 0.0:
                        continue
                    orbit = frozenset({
                        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
                    })
                    if orbit in seen:
                        continue
                    seen.add(orbit)
                    out.append(fmt(v, p + 1, q + 1, r + 1, s + 1))
    for p in range(m):
        for q in range(p, m):
            v = ints.one_body[p, q]
            if v != 0.0:
                out.append(fmt(v, p + 1, q + 1, 0, 0))
    out.append(fmt(ints.core_energy, 0, 0, 0, 0))
    return "\n".join(out) + "\n"


def load_fcidump(path) -> IntegralSet:
    with open(path) as f:
        return parse_fcidump(f.read())


# -- Jordan-Wigner encoding ------------------------------------------------------


def _ladder_strings(q: int, dagger: bool) -> list[tuple[int, int, complex]]:
    """JW expansion of a_q or a+_q as canonical (x_mask, z_mask, coeff) strings.

    Strings are X^x Z^z products with per-qubit ordering X before Z;
    a_q = Z_<q X_q (1 - Z_q)/2 and the adjoint flips the sign of the XZ part.
    """
    z_prefix = (1 << q) - 1
    x = 1 << q
    sign = 1.0 if dagger else -1.0
    return [
        (x, z_prefix, 0.5),
        (x, z_prefix | x, sign * 0.5),
    ]


def _multiply_strings(a: tuple[int, int, complex], b: tuple[int, int, complex]):
    """Product of canonical strings: (X^xa Z^za)(X^xb Z^zb) with phase."""
    xa, za, ca = a
    xb, zb, cb = b
    # moving Z^za through X^xb picks up (-1)^{|za & xb|}
    sign = -1.0 if (bin(za & xb).count("1") & 1) else 1.0
    return xa ^ xb, za ^ zb, ca * cb * sign


def _accumulate_operator(dest: dict[tuple[int, int], complex], coeff: complex,
                         ladder: list[tuple[int, bool]]) -> None:
    """Add ``coeff * prod_of_ladder_ops`` (left to right) into ``dest``."""
    strings = [(0, 0, coeff)]
    for q, dagger in ladder:
        factors = _ladder_strings(q, dagger)
        strings = [_multiply_strings(s, f) for s in strings for f in factors]
    for x, z, c in strings:
        key = (x, z)
        dest[key] = dest.get(key, 0j) + c


def _xz_to_term(x: int, z: int, coeff: complex, n_qubits: int) -> PauliTerm:
    """Convert a canonical X^x Z^z string to letters; per qubit XZ = -iY."""
    letters = []
    phase = coeff
    for q in range(n_qubits):
        xb, zb = (x >> q) & 1, (z >> q) & 1
        if xb and zb:
            letters.append("Y")
            phase *= -1j
        elif xb:
            letters.append("X")
        elif zb:
            letters.append("Z")
        else:
            letters.append("I")
    return PauliTerm(phase, "".join(letters))


def jordan_wigner(ints: IntegralSet) -> QubitHamiltonian:
    """Qubit Hamiltonian of the integral set with interleaved spin-orbitals.

    One-body spin-orbital coefficients are h_pq delta(spin); the two-body
    piece is (1/2) (pq|rs) a+_{p,s} a+_{r,t} a_{s,t} a_{q,s} summed over
    both spins, with vanishing same-index combinations skipped.  The core
    energy (plus identity strings produced by the expansion) lands in the
    constant offset.
    """
    m = ints.n_spatial
    n = ints.n_qubits
    acc: dict[tuple[int, int], complex] = {}

    for p in range(m):
        for q in range(m):
            h = ints.one_body[p, q]
            if h == 0.0:
                continue
            for spin in (0, 1):
                _accumulate_operator(acc, h, [(2 * p + spin, True), (2 * q + spin, False)])

    for p in range(m):
        for q in range(m):
            for r in range(m):
                for s in range(m):
                    g = ints.two_body[p, q, r, s]
                    if g == 0.0:
                        continue
                    for sa in (0, 1):
                        for sb in (0, 1):
                            i1 = 2 * p + sa
                            j1 = 2 * q + sa
                            k1 = 2 * r + sb
                            l1 = 2 * s + sb
                            if i1 == k1 or j1 == l1:
                                continue
                            _accumulate_operator(
                                acc, 0.5 * g,
                                [(i1, True), (k1, True), (l1, False), (j1, False)],
                            )

    terms = [_xz_to_term(x, z, c, n) for (x, z), c in acc.items()]
    return QubitHamiltonian(n, terms, constant_offset=ints.core_energy)


def hf_state(n_qubits: int, n_electrons: int) -> int:
    """Reference determinant: the first ``n_electrons`` orbitals occupied."""
    if not 0 <= n_electrons <= n_qubits:
        raise ValueError(f"n_electrons {n_electrons} outside [0, {n_qubits}]")
    return (1 << n_electrons) - 1


def hf_energy(ints: IntegralSet) -> float:
    """Mean-field energy of the reference determinant, from the integrals.

    Sums diagonal one-body elements over occupied spin-orbitals plus the
    Coulomb/exchange pairs, plus the core energy; independent of the qubit
    encoding.
    """
    occupied = list(range(ints.n_electrons))
    e = ints.core_energy
    for so_i in occupied:
        e += ints.one_body[so_i // 2, so_i // 2]
    for so_i in occupied:
        for so_j in occupied:
            p, q = so_i // 2, so_j // 2
            coulomb = ints.two_body[p, p, q, q]
            exchange = ints.two_body[p, q, q, p] if so_i % 2 == so_j % 2 else 0.0
            e += 0.5 * (coulomb - exchange)
    return float(e)


__all__ = [
    "IntegralSet",
    "FcidumpError",
    "parse_fcidump",
    "write_fcidump",
    "load_fcidump",
    "jordan_wigner",
    "hf_state",
    "hf_energy",
]

"""Bit-string conventions shared across the package.

A computational basis vector of an N-qubit register is stored as a plain
Python integer (or ``uint64`` in arrays): bit ``i`` of the integer holds the
value of qubit ``i``, counting qubits from 0.  The text rendering used in
files and CLI output puts qubit 0 leftmost, e.g. ``format_bits(0b0011, 4)``
is ``"1100"``.
"""

from __future__ import annotations

import numpy as np


def format_bits(x: int, n_qubits: int) -> str:
    """Render a basis vector with qubit 0 as the leftmost character."""
    return "".join("1" if (x >> i) & 1 else "0" for i in range(n_qubits))


def parse_bits(text: str) -> int:
    """Inverse of :func:`format_bits`; leftmost character is qubit 0."""
    x = 0
    for i, c in enumerate(text):
        if c == "1":
            x |= 1 << i
        elif c != "0":
            raise ValueError(f"invalid bit character {c!r} in {text!r}")
    return x


def bit_columns(xs: np.ndarray, n_bits: int) -> np.ndarray:
    """Unpack uint64 basis vectors into an (len(xs), n_bits) array of 0/1."""
    xs = np.asarray(xs, dtype=np.uint64)
    shifts = np.arange(n_bits, dtype=np.uint64)
    return ((xs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.int8)


def popcount(xs: np.ndarray) -> np.ndarray:
    """Number of set bits, elementwise over an unsigned integer array."""
    return np.bitwise_count(np.asarray(xs, dtype=np.uint64)).astype(np.int64)

"""Pruning strategies for symmetry-aware autoregressive sampling.

Two families are supported:

* ``du`` (discard-unphysical): sample from the raw conditionals and throw
  away any counts routed into an unphysical subtree.  Sample totals may
  shrink.
* ``mu`` (mask-unphysical) with tail depth ``d``: at levels ``1..N-d`` a
  conditional whose sibling subtree is unphysical is overwritten to put all
  probability on the physical branch; the last ``d`` levels fall back to
  discard behaviour.  With ``d = 0`` no samples are ever lost.
"""

from __future__ import annotations

from dataclasses import dataclass

from .physicality import PhysicalityOracle

#: log-amplitude stand-in for "amplitude forced to zero".  A large negative
#: real constant instead of -inf keeps arithmetic NaN-free; exp(2 * it)
#: underflows to exactly 0.0.
NEG_SENTINEL = -1e30

DISCARD_UNPHYSICAL = "du"
MASK_UNPHYSICAL = "mu"


@dataclass(frozen=True)
class PruneStrategy:
    variant: str
    d: int = 0

    def __post_init__(self):
        if self.variant not in (DISCARD_UNPHYSICAL, MASK_UNPHYSICAL):
            raise ValueError(f"unknown strategy variant {self.variant!r}")
        if self.variant == DISCARD_UNPHYSICAL and self.d != 0:
            raise ValueError("du strategy takes no tail depth")
        if self.d < 0:
            raise ValueError("tail depth must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "PruneStrategy":
        """Accepts "du", "mu" (= mu-0) and "mu-<d>"."""
        text = text.strip().lower()
        if text == DISCARD_UNPHYSICAL:
            return cls(DISCARD_UNPHYSICAL)
        if text == MASK_UNPHYSICAL:
            return cls(MASK_UNPHYSICAL, 0)
        if text.startswith("mu-"):
            return cls(MASK_UNPHYSICAL, int(text[3:]))
        raise ValueError(f"cannot parse strategy {text!r}")

    def __str__(self):
        if self.variant == MASK_UNPHYSICAL:
            return f"mu-{self.d}"
        return self.variant


@dataclass
class MaskingContext:
    """A pruning strategy bound to the physicality oracle of one sector."""

    oracle: PhysicalityOracle
    strategy: PruneStrategy

    def __post_init__(self):
        if self.strategy.d >= self.oracle.n_qubits:
            raise ValueError(
                f"tail depth {self.strategy.d} must be smaller than "
                f"{self.oracle.n_qubits} qubits"
            )

    @property
    def n_qubits(self) -> int:
        return self.oracle.n_qubits

    def masks_level(self, i: int) -> bool:
        """Whether conditionals at sampling-tree level ``i`` are masked."""
        if self.strategy.variant != MASK_UNPHYSICAL:
            return False
        return i <= self.oracle.n_qubits - self.strategy.d


__all__ = [
    "NEG_SENTINEL",
    "DISCARD_UNPHYSICAL",
    "MASK_UNPHYSICAL",
    "PruneStrategy",
    "MaskingContext",
]

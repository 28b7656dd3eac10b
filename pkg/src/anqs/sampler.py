"""Level-synchronous statistics sampling over the autoregressive tree.

Instead of drawing basis vectors one at a time, occurrence counts are
propagated down the sampling tree: a node holding ``n_in`` pending samples
splits them between its children with a single binomial draw on the
conditional probability.  Nodes with zero pending samples are dropped, so
the network is evaluated on at most one batch per level regardless of the
requested sample total.

Pruning is controlled by the masking context: under ``mu`` the masked
conditionals already put zero probability on unphysical children, so no
counts are ever routed there; under ``du`` (and in the unmasked tail levels
of ``mu-d``) counts routed to an unphysical child are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masking import MaskingContext
from .network import ANQSModel

#: validation slack for probabilities entering a binomial draw
_P_TOL = 1e-12


@dataclass
class SamplingStatistics:
    """Unique configurations with occurrence counts from one sampling pass."""

    configurations: np.ndarray  # uint64, unique basis vectors
    counts: np.ndarray  # int64, positive occurrence numbers
    requested: int
    retained: int

    @property
    def n_unique(self) -> int:
        return len(self.configurations)

    @property
    def is_empty(self) -> bool:
        return self.retained == 0

    def weights(self) -> np.ndarray:
        """Normalized occurrence weights; they sum to one."""
        if self.is_empty:
            raise ValueError("empty statistics have no weights")
        return self.counts / self.retained


def sample_binomial(n: int, p: float, rng: np.random.Generator) -> int:
    """One exact draw from Binomial(n, p).

    Thin validation wrapper over the generator's binomial sampler, which
    uses exact inversion for small n*p and an exact rejection method for
    large counts, so a single draw stays O(1) even for n ~ 1e12.
    """
    if n < 0:
        raise ValueError("trial count must be non-negative")
    if p < -_P_TOL or p > 1.0 + _P_TOL:
        raise ValueError(f"probability {p} outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    return int(rng.binomial(n, p))


def _level_generators(seed, n_levels: int) -> list[np.random.Generator]:
    """Independent per-level generators derived from one seed key.

    Frontier nodes at one level share a generator but receive a vectorized
    draw in frontier order, which is itself deterministic, so results do
    not depend on how the frontier is processed.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(child)) for child in seed.spawn(n_levels)]


def sample_statistics(model: ANQSModel, ctx: MaskingContext, n_samples: int,
                      seed) -> SamplingStatistics:
    """Draw occurrence statistics for ``n_samples`` virtual samples.

    Returns unique in-sector configurations with counts.  Under ``mu-0``
    the retained total always equals ``n_samples``; under ``du`` and
    ``mu-d`` with d > 0 counts routed into unphysical subtrees are lost and
    the result may even be empty (flagged via ``is_empty``, not an
    exception).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    n = model.n_qubits
    if ctx.n_qubits != n:
        raise ValueError("masking context and model disagree on qubit count")
    gens = _level_generators(seed, n)

    xs = np.zeros(1, dtype=np.uint64)
    counts = np.array([n_samples], dtype=np.int64)
    node_idx = np.zeros(1, dtype=np.int64)
    inputs = np.zeros((1, 0), dtype=np.complex128)

    for li in range(n):
        i = li + 1
        log_amps = model.forward_level(i, inputs)
        phys0, phys1 = ctx.oracle.child_phys_flags(li, node_idx)
        if ctx.masks_level(i):
            log_amps = model.apply_mask(log_amps, phys0, phys1)
            # masked probabilities are exactly 0/1, so no counts can be lost
            keep0 = phys0
            keep1 = phys1
        else:
            keep0 = phys0
            keep1 = phys1
        p0 = np.exp(2.0 * log_amps[:, 0].real)
        if (p0 < -_P_TOL).any() or (p0 > 1.0 + _P_TOL).any():
            raise ValueError("conditional probabilities left [0, 1]")
        np.clip(p0, 0.0, 1.0, out=p0)
        n0 = gens[li].binomial(counts, p0)
        n1 = counts - n0

        parts = []
        for b, nb, keep in ((0, n0, keep0), (1, n1, keep1)):
            sel = (nb > 0) & keep
            if not sel.any():
                continue
            child_xs = xs[sel] | np.uint64(b << li)
            child_counts = nb[sel]
            child_nodes = ctx.oracle.child_idx[b][li][node_idx[sel]]
            bit_col = np.full((sel.sum(), 1), 2.0 * b - 1.0, dtype=np.complex128)
            child_inputs = np.concatenate([inputs[sel], bit_col], axis=1)
            parts.append((child_xs, child_counts, child_nodes, child_inputs))
        if not parts:
            return SamplingStatistics(
                np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64), n_samples, 0
            )
        xs = np.concatenate([p[0] for p in parts])
        counts = np.concatenate([p[1] for p in parts])
        node_idx = np.concatenate([p[2] for p in parts])
        inputs = np.concatenate([p[3] for p in parts], axis=0)

    # every surviving leaf must sit in the target sector
    assert (node_idx == ctx.oracle.ref_leaf_index).all()
    return SamplingStatistics(xs, counts, n_samples, int(counts.sum()))


__all__ = ["SamplingStatistics", "sample_binomial", "sample_statistics"]

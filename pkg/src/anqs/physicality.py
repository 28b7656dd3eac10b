"""Exact physicality oracle over partial eigenvalue vectors.

A partial basis vector is "physical" when at least one completion lands in
the target symmetry sector.  Because physicality only depends on the vector
of partial eigenvalues (not on the prefix itself), the decision table is
polynomially sized: this module precomputes it level by level as a layered
DAG whose nodes are reachable partial-eigenvalue keys and whose two out-
edges per node correspond to the next bit being 0 or 1.

Levels follow the sampling-tree convention: level ``i`` means ``i - 1``
bits are fixed, so level 1 is the root and level ``N + 1`` holds full
vectors.  The same sweep that decides physicality also counts, for every
node, how many completions reach the sector (arbitrary-precision), which
gives exact sector sizes.
"""

from __future__ import annotations

import numpy as np

from .symmetry import MULTIPLICATIVE, SymmetryEnsemble


class PhysicalityOracle:
    """Memoized physicality decisions for one symmetry ensemble.

    Construction enumerates all keys reachable from the root (no pruning,
    so unphysical nodes are represented too), then sweeps backward marking
    each key physical iff some child is, terminating at full vectors where
    only the target eigenvalue vector is physical.  Construction fails if
    the sector is empty.  After construction the oracle is immutable and
    can be read concurrently.
    """

    def __init__(self, ensemble: SymmetryEnsemble):
        self.ensemble = ensemble
        self.n_qubits = ensemble.n_qubits
        # plain-int copies of the local value tables; the construction loop
        # is pure Python and numpy scalar indexing would dominate it
        self._locals = [
            [(int(d.local_values[i, 0]), int(d.local_values[i, 1])) for i in range(self.n_qubits)]
            for d in ensemble.descriptors
        ]
        self._mult = [d.kind == MULTIPLICATIVE for d in ensemble.descriptors]
        self._build_packing()
        self._build_levels()
        self._sweep_backward()
        self._lazy: dict[tuple[int, tuple[int, ...]], bool] = {}
        if not bool(self.phys[0][0]):
            raise ValueError(
                "empty symmetry sector: no basis vector attains the reference eigenvalues"
            )

    # -- key packing --------------------------------------------------------

    def _build_packing(self):
        offsets = []
        sizes = []
        for d in self.ensemble.descriptors:
            lo, hi = d.prefix_min_max()
            offsets.append(-lo)
            sizes.append(hi - lo + 1)
        strides = []
        acc = 1
        for s in sizes:
            strides.append(acc)
            acc *= s
        self._offsets = offsets
        self._sizes = sizes
        self._strides = strides
        self.domain_size = acc

    def pack_key(self, s_partial: tuple[int, ...]) -> int | None:
        """Packed integer for a partial eigenvalue vector, None if out of domain."""
        packed = 0
        for v, off, size, stride in zip(s_partial, self._offsets, self._sizes, self._strides):
            u = v + off
            if not 0 <= u < size:
                return None
            packed += u * stride
        return packed

    def unpack_key(self, packed: int) -> tuple[int, ...]:
        out = []
        for off, size, stride in zip(self._offsets, self._sizes, self._strides):
            out.append((packed // stride) % size - off)
        return tuple(out)

    def _normalize_key(self, s_partial) -> tuple[int, ...]:
        if isinstance(s_partial, (int, np.integer)):
            s_partial = (int(s_partial),)
        s_partial = tuple(int(v) for v in s_partial)
        if len(s_partial) != self.ensemble.n_symmetries:
            raise ValueError(
                f"key has {len(s_partial)} components, ensemble has "
                f"{self.ensemble.n_symmetries}"
            )
        return s_partial

    def _compose(self, s_partial: tuple[int, ...], level_index: int, b: int) -> tuple[int, ...]:
        """Child key when fixing bit ``b`` at 0-based qubit ``level_index``."""
        out = []
        for loc, mult, v in zip(self._locals, self._mult, s_partial):
            nv = v + loc[level_index][b]
            if mult:
                nv &= 1
            out.append(nv)
        return tuple(out)

    # -- table construction --------------------------------------------------

    def _build_levels(self):
        n = self.n_qubits
        root = tuple(0 for _ in range(self.ensemble.n_symmetries))
        self.level_keys: list[dict[int, int]] = []  # packed key -> index
        self.keys_by_level: list[list[tuple[int, ...]]] = []
        self.child_idx: list[list[np.ndarray]] = [[], []]  # [b][li][node] -> next index

        cur: dict[int, int] = {self.pack_key(root): 0}
        cur_keys = [root]
        for li in range(n):
            self.level_keys.append(cur)
            self.keys_by_level.append(cur_keys)
            nxt: dict[int, int] = {}
            nxt_keys: list[tuple[int, ...]] = []
            children = [np.empty(len(cur_keys), dtype=np.int64) for _ in range(2)]
            for idx, key in enumerate(cur_keys):
                for b in (0, 1):
                    ck = self._compose(key, li, b)
                    cp = self.pack_key(ck)
                    pos = nxt.get(cp)
                    if pos is None:
                        pos = len(nxt_keys)
                        nxt[cp] = pos
                        nxt_keys.append(ck)
                    children[b][idx] = pos
            self.child_idx[0].append(children[0])
            self.child_idx[1].append(children[1])
            cur = nxt
            cur_keys = nxt_keys
        self.level_keys.append(cur)
        self.keys_by_level.append(cur_keys)

    def _sweep_backward(self):
        n = self.n_qubits
        ref = self.ensemble.s_ref
        leaf_keys = self.keys_by_level[n]
        self.phys: list[np.ndarray] = [None] * (n + 1)
        self.counts: list[list[int]] = [None] * (n + 1)
        self.phys[n] = np.array([k == ref for k in leaf_keys], dtype=bool)
        self.counts[n] = [1 if k == ref else 0 for k in leaf_keys]
        self.ref_leaf_index = None
        packed_ref = self.pack_key(ref)
        if packed_ref is not None:
            self.ref_leaf_index = self.level_keys[n].get(packed_ref)
        for li in range(n - 1, -1, -1):
            c0, c1 = self.child_idx[0][li], self.child_idx[1][li]
            nxt_phys = self.phys[li + 1]
            self.phys[li] = nxt_phys[c0] | nxt_phys[c1]
            nxt_counts = self.counts[li + 1]
            self.counts[li] = [nxt_counts[a] + nxt_counts[b] for a, b in zip(c0, c1)]

    # -- queries -------------------------------------------------------------

    @property
    def sector_size(self) -> int:
        """Exact number of full basis vectors in the target sector."""
        return self.counts[0][0]

    def _level_index(self, i: int) -> int:
        if not 1 <= i <= self.n_qubits + 1:
            raise ValueError(f"level {i} outside 1..{self.n_qubits + 1}")
        return i - 1

    def is_phys(self, i: int, s_partial) -> bool:
        """Whether some completion from level ``i`` with this key hits the sector.

        Keys reachable from the root are table lookups; unreachable keys are
        answered by the same recursion on demand.
        """
        li = self._level_index(i)
        key = self._normalize_key(s_partial)
        packed = self.pack_key(key)
        if packed is not None:
            idx = self.level_keys[li].get(packed)
            if idx is not None:
                return bool(self.phys[li][idx])
        return self._is_phys_lazy(li, key)

    def _is_phys_lazy(self, li: int, key: tuple[int, ...]) -> bool:
        memo_key = (li, key)
        cached = self._lazy.get(memo_key)
        if cached is not None:
            return cached
        if li == self.n_qubits:
            result = key == self.ensemble.s_ref
        else:
            result = any(
                self._is_phys_lazy(li + 1, self._compose(key, li, b)) for b in (0, 1)
            )
        self._lazy[memo_key] = result
        return result

    def child_physicality(self, i: int, s_partial) -> tuple[bool, bool]:
        """Physicality of the two children of a physical node."""
        li = self._level_index(i)
        if li >= self.n_qubits:
            raise ValueError("leaf nodes have no children")
        key = self._normalize_key(s_partial)
        if not self.is_phys(i, key):
            raise RuntimeError(f"child_physicality called on unphysical node ({i}, {key})")
        flags = tuple(self.is_phys(i + 1, self._compose(key, li, b)) for b in (0, 1))
        # a physical node must have a physical child
        assert flags[0] or flags[1]
        return flags

    def node_count(self, i: int, s_partial) -> int:
        """Number of sector completions from a reachable node; 0 if none."""
        li = self._level_index(i)
        key = self._normalize_key(s_partial)
        packed = self.pack_key(key)
        if packed is not None:
            idx = self.level_keys[li].get(packed)
            if idx is not None:
                return self.counts[li][idx]
        return 0

    def table_size(self) -> int:
        return sum(len(keys) for keys in self.keys_by_level)

    # -- vectorized DAG walking (hot paths) -----------------------------------

    def root_index(self) -> int:
        return 0

    def advance(self, li: int, node_idx: np.ndarray, bits: np.ndarray) -> np.ndarray:
        """Child node indices after fixing qubit ``li`` to ``bits``."""
        c0 = self.child_idx[0][li][node_idx]
        c1 = self.child_idx[1][li][node_idx]
        return np.where(bits.astype(bool), c1, c0)

    def child_phys_flags(self, li: int, node_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nxt = self.phys[li + 1]
        return nxt[self.child_idx[0][li][node_idx]], nxt[self.child_idx[1][li][node_idx]]

    def walk(self, xs: np.ndarray) -> np.ndarray:
        """Node index per level for each basis vector; shape (N+1, len(xs))."""
        xs = np.asarray(xs, dtype=np.uint64)
        out = np.empty((self.n_qubits + 1, len(xs)), dtype=np.int64)
        idx = np.zeros(len(xs), dtype=np.int64)
        out[0] = idx
        for li in range(self.n_qubits):
            bits = ((xs >> np.uint64(li)) & np.uint64(1)).astype(np.int64)
            idx = self.advance(li, idx, bits)
            out[li + 1] = idx
        return out

    def in_sector_batch(self, xs: np.ndarray) -> np.ndarray:
        if self.ref_leaf_index is None:
            return np.zeros(len(xs), dtype=bool)
        return self.walk(xs)[-1] == self.ref_leaf_index

    def sector_vectors(self) -> list[int]:
        """All sector members in lexicographic order (qubit 0 most significant).

        Cost is O(sector size * N); intended for exact enumeration at desk
        scale, not for the sampling hot path.
        """
        out: list[int] = []
        stack = [(0, 0, 0)]  # (level_index, node_index, partial x)
        while stack:
            li, idx, x = stack.pop()
            if li == self.n_qubits:
                out.append(x)
                continue
            # push bit 1 first so bit 0 is explored first (lexicographic order)
            for b in (1, 0):
                child = self.child_idx[b][li][idx]
                if self.phys[li + 1][child]:
                    stack.append((li + 1, int(child), x | (b << li)))
        return out


def count_sector(ensemble: SymmetryEnsemble) -> int:
    """Exact size of the target symmetry sector."""
    return PhysicalityOracle(ensemble).sector_size


__all__ = ["PhysicalityOracle", "count_sector"]

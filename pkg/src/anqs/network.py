"""Autoregressive ansatz: N complex-weight conditional subnetworks.

The wave function factors into per-qubit normalized conditionals,
``psi(x) = prod_i psi_i(x_i | x_<i)``.  Subnetwork ``i`` is a two-hidden-
layer MLP with complex weights mapping the first ``i - 1`` bits (encoded as
+-1) to the pair ``(log psi_i(0|.), log psi_i(1|.))``.  The activation
stack is

* layer 1: elementwise complex tanh,
* layer 2: leaky rectifier applied to real and imaginary parts separately,
* output:  z -> z - 0.5 * LogSumExp(2 Re z) across the output pair, which
  forces |psi_i(0|.)|^2 + |psi_i(1|.)|^2 = 1.

The default negative branch of the rectifier is ``-0.01 x`` (sign included);
set ``negative_slope=0.01`` for the conventional leaky variant.

Gradients of ``ln psi*`` with respect to the real parameter components (real
and imaginary part of every complex weight) are computed by a hand-written
reverse pass specialized to this architecture; no autodiff framework is
involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import bit_columns
from .masking import MASK_UNPHYSICAL, NEG_SENTINEL, MaskingContext

_ARRAY_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass
class ConditionalNet:
    """Weights of one conditional subnetwork (input width ``index - 1``)."""

    index: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def arrays(self):
        return [getattr(self, name) for name in _ARRAY_NAMES]


def _lerelu(z: np.ndarray, slope: float) -> np.ndarray:
    re, im = z.real, z.imag
    return np.where(re >= 0, re, slope * re) + 1j * np.where(im >= 0, im, slope * im)


def _lerelu_grads(z: np.ndarray, slope: float) -> tuple[np.ndarray, np.ndarray]:
    one = np.float64(1.0)
    return np.where(z.real >= 0, one, slope), np.where(z.imag >= 0, one, slope)


def _half_logsumexp2(z3: np.ndarray) -> np.ndarray:
    """0.5 * LogSumExp(2 Re z3) along the last (size-2) axis, stable."""
    r = 2.0 * z3.real
    m = r.max(axis=-1, keepdims=True)
    return 0.5 * (m + np.log(np.exp(r - m).sum(axis=-1, keepdims=True)))


class ANQSModel:
    """The full N-subnetwork ansatz with a flat real-parameter view."""

    def __init__(self, n_qubits: int, hidden: int = 64, seed: int = 0,
                 negative_slope: float = -0.01):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        if hidden < 1:
            raise ValueError("hidden width must be positive")
        self.n_qubits = n_qubits
        self.hidden = hidden
        self.seed = seed
        self.negative_slope = float(negative_slope)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0x1417))))
        self.subnets = [self._init_subnet(i, rng) for i in range(1, n_qubits + 1)]

    def _init_subnet(self, index: int, rng) -> ConditionalNet:
        h = self.hidden

        def draw(shape, fan_in):
            # 0.5 keeps pre-activation imaginary parts well away from the
            # poles of complex tanh at +- i pi/2; at unit scale the hidden
            # activations blow up and optimization traps at excited states
            scale = 0.5 / np.sqrt(max(fan_in, 1))
            return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

        return ConditionalNet(
            index=index,
            w1=draw((h, index - 1), index - 1),
            b1=np.zeros(h, dtype=np.complex128),
            w2=draw((h, h), h),
            b2=np.zeros(h, dtype=np.complex128),
            w3=draw((2, h), h),
            b3=np.zeros(2, dtype=np.complex128),
        )

    # -- parameter vector view ------------------------------------------------

    @property
    def n_parameters(self) -> int:
        return 2 * sum(a.size for net in self.subnets for a in net.arrays())

    def parameters_vector(self) -> np.ndarray:
        """Flat real view: per array, real components then imaginary ones."""
        parts = []
        for net in self.subnets:
            for a in net.arrays():
                parts.append(a.real.ravel())
                parts.append(a.imag.ravel())
        return np.concatenate(parts)

    def set_parameters_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} components, got {vec.shape}")
        pos = 0
        for net in self.subnets:
            for name in _ARRAY_NAMES:
                a = getattr(net, name)
                re = vec[pos:pos + a.size].reshape(a.shape)
                pos += a.size
                im = vec[pos:pos + a.size].reshape(a.shape)
                pos += a.size
                setattr(net, name, re + 1j * im)

    # -- forward --------------------------------------------------------------

    def _forward(self, i: int, inputs: np.ndarray):
        """Forward pass of subnet ``i`` on a (k, i-1) +-1 input matrix."""
        net = self.subnets[i - 1]
        z1 = inputs @ net.w1.T + net.b1
        a1 = np.tanh(z1)
        z2 = a1 @ net.w2.T + net.b2
        a2 = _lerelu(z2, self.negative_slope)
        z3 = a2 @ net.w3.T + net.b3
        out = z3 - _half_logsumexp2(z3)
        cache = (inputs, a1, z2, a2, z3)
        return out, cache

    def level_inputs(self, xs: np.ndarray, i: int) -> np.ndarray:
        """+-1 complex encoding of the first ``i - 1`` bits of each vector."""
        bits = bit_columns(xs, i - 1)
        return (2.0 * bits - 1.0).astype(np.complex128)

    def forward_level(self, i: int, inputs: np.ndarray) -> np.ndarray:
        """Log-amplitude pairs (k, 2) of subnet ``i`` for prepared inputs."""
        if inputs.shape[1] != i - 1:
            raise ValueError(f"subnet {i} expects {i - 1} input bits, got {inputs.shape[1]}")
        out, _ = self._forward(i, inputs)
        return out

    def conditional_log_amps(self, i: int, x_prefix: int) -> np.ndarray:
        """Raw (log psi_i(0|prefix), log psi_i(1|prefix)) for one prefix."""
        if not 1 <= i <= self.n_qubits:
            raise ValueError(f"subnet index {i} outside 1..{self.n_qubits}")
        if x_prefix >> max(i - 1, 0):
            raise ValueError(f"prefix {x_prefix:#x} has bits beyond position {i - 2}")
        inputs = self.level_inputs(np.array([x_prefix], dtype=np.uint64), i)
        return self.forward_level(i, inputs)[0]

    # -- masking ---------------------------------------------------------------

    @staticmethod
    def apply_mask(log_amps: np.ndarray, phys0: np.ndarray, phys1: np.ndarray) -> np.ndarray:
        """Overwrite conditionals whose sibling subtree is unphysical.

        Where exactly one child is physical the pair becomes (sentinel, 0)
        or (0, sentinel); where both are physical the raw values pass
        through.  Rows with both children unphysical only occur below nodes
        that are themselves unphysical and are passed through unchanged.
        """
        masked = log_amps.copy()
        only0 = phys0 & ~phys1
        only1 = phys1 & ~phys0
        masked[only0, 0] = 0.0
        masked[only0, 1] = NEG_SENTINEL
        masked[only1, 0] = NEG_SENTINEL
        masked[only1, 1] = 0.0
        return masked

    def masked_conditional_log_amps(self, ctx: MaskingContext, i: int, x_prefix: int,
                                    s_partial) -> np.ndarray:
        """Conditional pair after the strategy's masking rule at level ``i``."""
        raw = self.conditional_log_amps(i, x_prefix)
        if not ctx.masks_level(i):
            return raw
        phys0, phys1 = ctx.oracle.child_physicality(i, s_partial)
        return self.apply_mask(raw[None, :], np.array([phys0]), np.array([phys1]))[0]

    # -- full log-amplitudes ----------------------------------------------------

    def log_psi_batch(self, ctx: MaskingContext | None, xs: np.ndarray) -> np.ndarray:
        """log psi(x) for a batch; masked amplitudes when ctx is a mu context.

        Under a mu context, vectors outside the target sector get the
        sentinel value (zero amplitude).
        """
        xs = np.asarray(xs, dtype=np.uint64)
        k = len(xs)
        total = np.zeros(k, dtype=np.complex128)
        masked_ctx = ctx is not None and ctx.strategy.variant == MASK_UNPHYSICAL
        if masked_ctx:
            node_idx = np.zeros(k, dtype=np.int64)
        full_inputs = self.level_inputs(xs, self.n_qubits + 1)
        bits_all = bit_columns(xs, self.n_qubits)
        rows = np.arange(k)
        for i in range(1, self.n_qubits + 1):
            out, _ = self._forward(i, full_inputs[:, : i - 1])
            bits = bits_all[:, i - 1].astype(np.int64)
            value = out[rows, bits]
            if masked_ctx and ctx.masks_level(i):
                phys0, phys1 = ctx.oracle.child_phys_flags(i - 1, node_idx)
                one_child = phys0 ^ phys1
                taken_phys = np.where(bits.astype(bool), phys1, phys0)
                value = np.where(one_child & taken_phys, 0.0, value)
                value = np.where(one_child & ~taken_phys, NEG_SENTINEL, value)
            total += value
            if masked_ctx:
                node_idx = ctx.oracle.advance(i - 1, node_idx, bits)
        if masked_ctx:
            in_sector = node_idx == ctx.oracle.ref_leaf_index
            total = np.where(in_sector, total, NEG_SENTINEL + 0j)
        return total

    def log_psi(self, ctx: MaskingContext | None, x: int) -> complex:
        return complex(self.log_psi_batch(ctx, np.array([x], dtype=np.uint64))[0])

    # -- reverse mode -----------------------------------------------------------

    def _backward(self, i: int, cache, g_out: np.ndarray):
        """Reverse pass of subnet ``i``.

        ``g_out`` rows are packed adjoints d(target)/d(Re v) + i d(target)/d(Im v)
        of the selected output entries (zeros elsewhere).  Returns per-config
        packed adjoints for each parameter array; the input adjoint is not
        needed because subnet inputs are data.
        """
        net = self.subnets[i - 1]
        inputs, a1, z2, a2, z3 = cache
        p = np.exp(2.0 * z3.real - 2.0 * _half_logsumexp2(z3))
        g_z3 = g_out - p * g_out.real.sum(axis=1, keepdims=True)
        g_b3 = g_z3
        g_a2 = g_z3 @ np.conj(net.w3)
        dre, dim = _lerelu_grads(z2, self.negative_slope)
        g_z2 = dre * g_a2.real + 1j * (dim * g_a2.imag)
        g_b2 = g_z2
        g_a1 = g_z2 @ np.conj(net.w2)
        g_z1 = np.conj(1.0 - a1 * a1) * g_a1
        g_b1 = g_z1
        return {
            "w3": (g_z3, a2),
            "b3": g_b3,
            "w2": (g_z2, a1),
            "b2": g_b2,
            "w1": (g_z1, inputs),
            "b1": g_b1,
        }

    @staticmethod
    def _assemble_score_block(g_re: np.ndarray, g_im: np.ndarray) -> np.ndarray:
        """Score components for one parameter array from packed adjoints.

        For a complex weight w = a + ib the score entries are
        O_a = d(Re L)/da - i d(Im L)/da and O_b likewise; with packed
        adjoints these are the real/imaginary parts of g_re and g_im.
        The leading (batch or weight-row) axis is preserved, array axes
        are flattened.
        """
        k = g_re.shape[0]
        g_re = g_re.reshape(k, -1)
        g_im = g_im.reshape(k, -1)
        a_part = g_re.real - 1j * g_im.real
        b_part = g_re.imag - 1j * g_im.imag
        return np.concatenate([a_part, b_part], axis=1)

    def _seed_matrices(self, k: int, bits: np.ndarray, active: np.ndarray):
        """Output-adjoint seeds for the Re(ln psi) and Im(ln psi) targets."""
        seed_re = np.zeros((k, 2), dtype=np.complex128)
        seed_im = np.zeros((k, 2), dtype=np.complex128)
        rows = np.arange(k)
        seed_re[rows[active], bits[active]] = 1.0
        seed_im[rows[active], bits[active]] = 1.0j
        return seed_re, seed_im

    def _level_active(self, ctx: MaskingContext | None, i: int, node_idx, bits):
        """Which batch rows get gradient flow at level ``i`` (not masked)."""
        k = len(bits)
        if ctx is None or not ctx.masks_level(i):
            return np.ones(k, dtype=bool)
        phys0, phys1 = ctx.oracle.child_phys_flags(i - 1, node_idx)
        return ~(phys0 ^ phys1)

    def score_batch(self, ctx: MaskingContext | None, xs: np.ndarray) -> np.ndarray:
        """Per-configuration score vectors O(x) = grad_theta ln psi*(x).

        Returns a (k, n_parameters) complex matrix in the layout of
        :meth:`parameters_vector`.  Masked conditionals are constants and
        contribute zero columns.
        """
        xs = np.asarray(xs, dtype=np.uint64)
        k = len(xs)
        bits_all = bit_columns(xs, self.n_qubits)
        full_inputs = self.level_inputs(xs, self.n_qubits + 1)
        masked_ctx = ctx is not None and ctx.strategy.variant == MASK_UNPHYSICAL
        node_idx = np.zeros(k, dtype=np.int64) if masked_ctx else None
        blocks = []
        for i in range(1, self.n_qubits + 1):
            _, cache = self._forward(i, full_inputs[:, : i - 1])
            bits = bits_all[:, i - 1].astype(np.int64)
            active = self._level_active(ctx if masked_ctx else None, i, node_idx, bits)
            seed_re, seed_im = self._seed_matrices(k, bits, active)
            adj_re = self._backward(i, cache, seed_re)
            adj_im = self._backward(i, cache, seed_im)
            for name in _ARRAY_NAMES:
                if name.startswith("w"):
                    g_re = np.einsum("kc,kh->kch", adj_re[name][0], np.conj(adj_re[name][1]))
                    g_im = np.einsum("kc,kh->kch", adj_im[name][0], np.conj(adj_im[name][1]))
                else:
                    g_re, g_im = adj_re[name], adj_im[name]
                blocks.append(self._assemble_score_block(g_re, g_im))
            if masked_ctx:
                node_idx = ctx.oracle.advance(i - 1, node_idx, bits)
        return np.concatenate(blocks, axis=1)

    def score(self, ctx: MaskingContext | None, x: int) -> np.ndarray:
        return self.score_batch(ctx, np.array([x], dtype=np.uint64))[0]

    def weighted_score_sums(self, ctx: MaskingContext | None, xs: np.ndarray,
                            omegas: np.ndarray) -> np.ndarray:
        """Weighted sums ``sum_k omegas[m, k] * O(xs[k])`` without storing O.

        ``omegas`` must be real (m, k); the result is (m, n_parameters)
        complex.  This is the estimator hot path: the per-configuration
        outer products of the reverse pass are contracted with the weight
        rows on the fly.
        """
        xs = np.asarray(xs, dtype=np.uint64)
        k = len(xs)
        omegas = np.asarray(omegas, dtype=np.float64)
        if omegas.ndim != 2 or omegas.shape[1] != k:
            raise ValueError(f"omegas must be (m, {k})")
        bits_all = bit_columns(xs, self.n_qubits)
        full_inputs = self.level_inputs(xs, self.n_qubits + 1)
        masked_ctx = ctx is not None and ctx.strategy.variant == MASK_UNPHYSICAL
        node_idx = np.zeros(k, dtype=np.int64) if masked_ctx else None
        blocks = []
        for i in range(1, self.n_qubits + 1):
            _, cache = self._forward(i, full_inputs[:, : i - 1])
            bits = bits_all[:, i - 1].astype(np.int64)
            active = self._level_active(ctx if masked_ctx else None, i, node_idx, bits)
            seed_re, seed_im = self._seed_matrices(k, bits, active)
            adj_re = self._backward(i, cache, seed_re)
            adj_im = self._backward(i, cache, seed_im)
            for name in _ARRAY_NAMES:
                if name.startswith("w"):
                    g_re = np.einsum("mk,kc,kh->mch", omegas, adj_re[name][0],
                                     np.conj(adj_re[name][1]), optimize=True)
                    g_im = np.einsum("mk,kc,kh->mch", omegas, adj_im[name][0],
                                     np.conj(adj_im[name][1]), optimize=True)
                else:
                    g_re = omegas @ adj_re[name]
                    g_im = omegas @ adj_im[name]
                blocks.append(self._assemble_score_block(g_re, g_im))
            if masked_ctx:
                node_idx = ctx.oracle.advance(i - 1, node_idx, bits)
        return np.concatenate(blocks, axis=1)


# -- checkpoints ----------------------------------------------------------------


def save_checkpoint(model: ANQSModel, path) -> None:
    import json

    payload = {
        "n_qubits": model.n_qubits,
        "hidden": model.hidden,
        "seed": model.seed,
        "negative_slope": model.negative_slope,
        "params": model.parameters_vector().tolist(),
    }
    with open(path, "w") as f:
        json.dump(payload, f)
        f.write("\n")


def load_checkpoint(path) -> ANQSModel:
    import json

    with open(path) as f:
        payload = json.load(f)
    model = ANQSModel(
        n_qubits=int(payload["n_qubits"]),
        hidden=int(payload["hidden"]),
        seed=int(payload["seed"]),
        negative_slope=float(payload["negative_slope"]),
    )
    model.set_parameters_vector(np.asarray(payload["params"], dtype=np.float64))
    return model


__all__ = [
    "ConditionalNet",
    "ANQSModel",
    "save_checkpoint",
    "load_checkpoint",
]

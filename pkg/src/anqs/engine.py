"""Variational optimization loop: local energies, estimators, ADAM.

The energy of the ansatz is estimated from sampling statistics as the
count-weighted mean of local energies

    H_loc(x) = sum_x' <x|H|x'> psi(x') / psi(x),

and the parameter gradient as the covariance form

    grad E = 2 Re { <H_loc O> - <H_loc><O> },   O(x) = grad_theta ln psi*(x),

with all expectations taken under the normalized occurrence weights.  Under
mask-unphysical contexts the masked amplitudes are used everywhere; under
discard-unphysical the raw ones.  The weights normalize by the retained
count, which under mu-0 equals the requested batch size exactly.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .masking import MaskingContext, NEG_SENTINEL, PruneStrategy
from .network import ANQSModel, save_checkpoint
from .pauli import QubitHamiltonian, connected_configurations
from .physicality import PhysicalityOracle
from .sampler import SamplingStatistics, sample_statistics
from .symmetry import SymmetryEnsemble

#: log-amplitudes this close to the sentinel are treated as exact zeros
_ZERO_CUT = NEG_SENTINEL / 2


@dataclass
class EnergyEstimate:
    value: float
    raw_mean: complex
    variance: float
    n_unique: int
    retained: int
    skipped: bool = False

    @classmethod
    def skip(cls) -> "EnergyEstimate":
        return cls(float("nan"), complex("nan"), float("nan"), 0, 0, skipped=True)


@dataclass
class BatchSchedule:
    """Piecewise-constant requested sample totals over iterations.

    ``steps`` holds (inclusive iteration bound, n_samples) pairs with
    strictly increasing bounds; the final entry must be open-ended
    (bound None).
    """

    steps: list[tuple[int | None, int]]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("schedule needs at least one step")
        bounds = [b for b, _ in self.steps[:-1]]
        if self.steps[-1][0] is not None:
            raise ValueError("last schedule step must be open-ended")
        if any(b is None for b in bounds):
            raise ValueError("only the last step may be open-ended")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError("schedule bounds must be strictly increasing")
        if any(b < 1 for b in bounds) or any(n < 1 for _, n in self.steps):
            raise ValueError("bounds and sample totals must be positive")

    def n_samples(self, iteration: int) -> int:
        for bound, n in self.steps:
            if bound is None or iteration <= bound:
                return n
        raise AssertionError("unreachable: last step is open-ended")

    @classmethod
    def desk(cls) -> "BatchSchedule":
        """Desk-scale default: 1e3 / 1e4 / 1e5 up to 1e6 virtual samples."""
        return cls([(100, 10**3), (200, 10**4), (1000, 10**5), (None, 10**6)])

    @classmethod
    def full(cls) -> "BatchSchedule":
        """Production-scale preset: 1e5 up to 1e8 virtual samples."""
        return cls([(100, 10**5), (200, 10**6), (1000, 10**7), (None, 10**8)])

    @classmethod
    def constant(cls, n: int) -> "BatchSchedule":
        return cls([(None, n)])


@dataclass
class AdamState:
    """First/second moment accumulators for the ADAM update."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, n_parameters: int, learning_rate: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(np.zeros(n_parameters), np.zeros(n_parameters), 0,
                   learning_rate, beta1, beta2, epsilon)


def adam_step(state: AdamState, params: np.ndarray,
              gradient: np.ndarray) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected ADAM update; returns the new parameters and state."""
    if params.shape != gradient.shape or params.shape != state.m.shape:
        raise ValueError("parameter, gradient and moment shapes must agree")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * gradient
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * gradient**2
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    new_params = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_params, state


# -- local energies -----------------------------------------------------------


def local_energy(model: ANQSModel, ctx: MaskingContext | None, h: QubitHamiltonian,
                 x: int) -> complex:
    """Local energy of one configuration; amplitude ratios use ``ctx`` masking."""
    log_x = model.log_psi(ctx, x)
    if log_x.real < _ZERO_CUT:
        raise ValueError(f"psi({x:#x}) is zero under this masking context")
    total = 0j
    for target, amp in connected_configurations(h, x).items():
        log_t = model.log_psi(ctx, target)
        if log_t.real < _ZERO_CUT:
            continue
        total += np.conj(amp) * np.exp(log_t - log_x)
    return complex(total)


def local_energies_batch(model: ANQSModel, ctx: MaskingContext | None,
                         h: QubitHamiltonian, xs: np.ndarray,
                         oracle: PhysicalityOracle | None = None,
                         threads: int = 1) -> np.ndarray:
    """Local energies for a batch, with one deduplicated forward pass.

    When ``oracle`` is given, every connected configuration carrying a
    non-negligible matrix element is asserted to stay in the sector of the
    source configuration (symmetry-respecting Hamiltonian check).
    """
    xs = np.asarray(xs, dtype=np.uint64)
    targets, amps = h.column_amplitudes(xs)
    significant = np.abs(amps) > h.drop_threshold
    union, inverse = np.unique(np.concatenate([targets.ravel(), xs]), return_inverse=True)
    if oracle is not None:
        ok = oracle.in_sector_batch(union)
        target_ok = ok[inverse[: targets.size]].reshape(targets.shape)
        if (~target_ok & significant).any():
            raise ValueError("Hamiltonian couples sampled configurations out of the sector")
    log_union = _log_psi_threaded(model, ctx, union, threads)
    log_t = log_union[inverse[: targets.size]].reshape(targets.shape)
    log_x = log_union[inverse[targets.size:]]
    if (log_x.real < _ZERO_CUT).any():
        raise ValueError("zero-amplitude configuration in local energy batch")
    ratios = np.exp(log_t - log_x[:, None])
    ratios[~significant] = 0.0
    ratios[log_t.real < _ZERO_CUT] = 0.0
    return (np.conj(amps) * ratios).sum(axis=1) + h.constant_offset


def _chunk_ranges(n: int, parts: int) -> list[tuple[int, int]]:
    size = (n + parts - 1) // parts
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def _log_psi_threaded(model, ctx, xs, threads):
    if threads <= 1 or len(xs) < 2 * threads:
        return model.log_psi_batch(ctx, xs)
    out = np.empty(len(xs), dtype=np.complex128)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {
            pool.submit(model.log_psi_batch, ctx, xs[a:b]): (a, b)
            for a, b in _chunk_ranges(len(xs), threads)
        }
        for fut, (a, b) in futures.items():
            out[a:b] = fut.result()
    return out


# -- estimators ---------------------------------------------------------------


def estimate_energy(stats: SamplingStatistics, local_energies: np.ndarray) -> EnergyEstimate:
    """Count-weighted energy mean and variance from sampling statistics."""
    if stats.is_empty:
        return EnergyEstimate.skip()
    if len(local_energies) != stats.n_unique:
        raise ValueError("local energies misaligned with statistics entries")
    w = stats.weights()
    mean = complex(w @ local_energies)
    second = float(w @ np.abs(local_energies) ** 2)
    variance = max(second - abs(mean) ** 2, 0.0)
    return EnergyEstimate(mean.real, mean, variance, stats.n_unique, stats.retained)


def estimate_gradient(stats: SamplingStatistics, local_energies: np.ndarray,
                      scores: np.ndarray) -> np.ndarray:
    """Covariance-form gradient from explicit per-configuration scores."""
    if stats.is_empty:
        raise ValueError("cannot form a gradient from empty statistics")
    w = stats.weights()
    e_loc = w @ local_energies
    mean_score = w @ scores
    weighted = (w * local_energies) @ scores
    return 2.0 * np.real(weighted - e_loc * mean_score)


def _gradient_fused(model: ANQSModel, ctx: MaskingContext, stats: SamplingStatistics,
                    local_energies: np.ndarray) -> np.ndarray:
    """Same covariance form, contracting scores with weights on the fly."""
    w = stats.weights()
    wh = w * local_energies
    omegas = np.stack([w, wh.real, wh.imag])
    sums = model.weighted_score_sums(ctx, stats.configurations, omegas)
    mean_score = sums[0]
    weighted = sums[1] + 1j * sums[2]
    e_loc = complex(w @ local_energies)
    return 2.0 * np.real(weighted - e_loc * mean_score)


# -- optimization loop ---------------------------------------------------------


@dataclass
class TraceRecord:
    iteration: int
    energy: float
    variance: float
    n_unique: int
    retained: int
    wall_ms: float


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    min_energy: float = float("inf")
    iteration_of_min: int = 0
    aborted: bool = False
    abort_reason: str = ""

    def add(self, rec: TraceRecord) -> None:
        self.records.append(rec)
        if not np.isnan(rec.energy) and rec.energy < self.min_energy:
            self.min_energy = rec.energy
            self.iteration_of_min = rec.iteration

    @property
    def n_iterations(self) -> int:
        return len(self.records)


@dataclass
class EngineConfig:
    hamiltonian: QubitHamiltonian
    ensemble: SymmetryEnsemble
    strategy: PruneStrategy
    iterations: int
    seed: int = 0
    hidden: int = 64
    negative_slope: float = -0.01
    schedule: BatchSchedule = field(default_factory=BatchSchedule.desk)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    output_dir: str | None = None
    checkpoint_every: int = 0
    stop_below_energy: float | None = None
    max_empty_iterations: int = 100
    threads: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.hamiltonian.n_qubits != self.ensemble.n_qubits:
            raise ValueError("Hamiltonian and ensemble disagree on qubit count")
        if self.strategy.d >= self.hamiltonian.n_qubits:
            raise ValueError("strategy tail depth must be smaller than the qubit count")


_TRACE_COLUMNS = ("iter", "energy", "variance", "n_unique", "retained", "wall_ms")


def run(config: EngineConfig) -> RunTrace:
    """Full optimization: sample, estimate, update; returns the run trace.

    When ``config.output_dir`` is set, a trace CSV is written incrementally
    and model checkpoints are saved at the configured cadence plus at the
    end.  A run aborts (``trace.aborted``) after ``max_empty_iterations``
    consecutive iterations without retained samples.
    """
    h = config.hamiltonian
    oracle = PhysicalityOracle(config.ensemble)
    ctx = MaskingContext(oracle, config.strategy)
    model = ANQSModel(h.n_qubits, hidden=config.hidden, seed=config.seed,
                      negative_slope=config.negative_slope)
    params = model.parameters_vector()
    adam = AdamState.fresh(model.n_parameters, config.learning_rate, config.beta1,
                           config.beta2, config.epsilon)
    trace = RunTrace()

    trace_file = None
    writer = None
    if config.output_dir is not None:
        os.makedirs(config.output_dir, exist_ok=True)
        trace_file = open(os.path.join(config.output_dir, "trace.csv"), "w", newline="")
        writer = csv.writer(trace_file)
        writer.writerow(_TRACE_COLUMNS)

    consecutive_empty = 0
    try:
        for t in range(1, config.iterations + 1):
            t0 = time.perf_counter()
            n_samples = config.schedule.n_samples(t)
            stats = sample_statistics(model, ctx, n_samples,
                                      np.random.SeedSequence((config.seed, 0x5A, t)))
            if stats.is_empty:
                consecutive_empty += 1
                rec = TraceRecord(t, float("nan"), float("nan"), 0, 0,
                                  round((time.perf_counter() - t0) * 1e3, 3))
                trace.add(rec)
                _write_row(writer, trace_file, rec)
                if consecutive_empty >= config.max_empty_iterations:
                    trace.aborted = True
                    trace.abort_reason = (
                        f"{consecutive_empty} consecutive iterations retained no samples"
                    )
                    break
                continue
            consecutive_empty = 0
            hloc = local_energies_batch(model, ctx, h, stats.configurations,
                                        oracle=oracle, threads=config.threads)
            est = estimate_energy(stats, hloc)
            grad = _gradient_fused(model, ctx, stats, hloc)
            params, adam = adam_step(adam, params, grad)
            model.set_parameters_vector(params)
            rec = TraceRecord(t, est.value, est.variance, est.n_unique, est.retained,
                              round((time.perf_counter() - t0) * 1e3, 3))
            trace.add(rec)
            _write_row(writer, trace_file, rec)
            if config.checkpoint_every and t % config.checkpoint_every == 0 \
                    and config.output_dir is not None:
                save_checkpoint(model, os.path.join(config.output_dir, "checkpoint.json"))
            if config.stop_below_energy is not None \
                    and trace.min_energy <= config.stop_below_energy:
                break
    finally:
        if config.output_dir is not None:
            save_checkpoint(model, os.path.join(config.output_dir, "checkpoint.json"))
        if trace_file is not None:
            trace_file.close()
    return trace


def _write_row(writer, trace_file, rec: TraceRecord) -> None:
    if writer is None:
        return
    writer.writerow([rec.iteration, repr(rec.energy), repr(rec.variance),
                     rec.n_unique, rec.retained, repr(rec.wall_ms)])
    trace_file.flush()


__all__ = [
    "EnergyEstimate",
    "BatchSchedule",
    "AdamState",
    "adam_step",
    "local_energy",
    "local_energies_batch",
    "estimate_energy",
    "estimate_gradient",
    "TraceRecord",
    "RunTrace",
    "EngineConfig",
    "run",
]

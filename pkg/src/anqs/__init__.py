"""Symmetry-constrained autoregressive neural quantum states.

Variational ground-state search for qubit Hamiltonians: an autoregressive
ansatz with complex-weight conditional subnetworks, statistics sampling
restricted to a quantum-number symmetry sector through an exact physicality
oracle, and an exact-diagonalization reference for desk-scale verification.
"""

__version__ = "0.1.0"

from .bits import format_bits, parse_bits
from .ed import SectorBasis, build_heisenberg, ground_energy
from .engine import (
    AdamState,
    BatchSchedule,
    EnergyEstimate,
    EngineConfig,
    RunTrace,
    adam_step,
    estimate_energy,
    estimate_gradient,
    local_energy,
    run,
)
from .fermion import (
    IntegralSet,
    hf_energy,
    hf_state,
    jordan_wigner,
    load_fcidump,
    parse_fcidump,
    write_fcidump,
)
from .masking import MaskingContext, PruneStrategy
from .network import ANQSModel, load_checkpoint, save_checkpoint
from .pauli import (
    PauliTerm,
    QubitHamiltonian,
    apply_term,
    connected_configurations,
    discover_z2,
    load_hamiltonian_json,
    save_hamiltonian_json,
)
from .physicality import PhysicalityOracle, count_sector
from .sampler import SamplingStatistics, sample_binomial, sample_statistics
from .symmetry import (
    SymmetryDescriptor,
    SymmetryEnsemble,
    fix_sector,
    magnetization,
    particle_number,
    spin_projection,
    z2_descriptor,
)

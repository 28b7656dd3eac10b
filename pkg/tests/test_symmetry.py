import numpy as np
import pytest

from anqs.bits import parse_bits
from anqs.ed import build_heisenberg
from anqs.fermion import hf_state
from anqs.pauli import PauliTerm, QubitHamiltonian
from anqs.symmetry import (
    MULTIPLICATIVE,
    SymmetryDescriptor,
    SymmetryEnsemble,
    check_hamiltonian_compatibility,
    fix_sector,
    magnetization,
    particle_number,
    spin_projection,
    z2_descriptor,
)


class TestParticleNumber:
    def test_popcount_eigenvalues(self):
        d = particle_number(4, 0)
        assert d.eval_full(parse_bits("0110")) == 2
        assert d.eval_full(parse_bits("0000")) == 0

    def test_reference_defaults_to_count(self):
        assert particle_number(12, 4).ref == 4
        assert particle_number(12, 4).eval_full(hf_state(12, 4)) == 4

    def test_range_validation(self):
        with pytest.raises(ValueError):
            particle_number(4, 5)
        with pytest.raises(ValueError):
            particle_number(4, -1)


class TestSpinProjection:
    def test_doubled_eigenvalues(self):
        d = spin_projection(4)
        assert d.eval_full(parse_bits("1100")) == 0
        assert d.eval_full(parse_bits("1010")) == 2

    def test_reference_determinant_is_balanced(self):
        assert spin_projection(12).eval_full(hf_state(12, 4)) == 0

    def test_odd_register_rejected(self):
        with pytest.raises(ValueError):
            spin_projection(5)


class TestMagnetization:
    def test_doubled_eigenvalues(self):
        d = magnetization(2)
        assert d.eval_full(parse_bits("01")) == 0
        assert d.eval_full(parse_bits("00")) == 2
        assert magnetization(4).eval_full(parse_bits("1111")) == -4


class TestZ2Descriptor:
    def test_parity_eigenvalues(self):
        d = z2_descriptor(0b11, 2)
        assert d.eval_full(0b11) == 0
        assert d.eval_full(0b01) == 1

    def test_single_overlap(self):
        d = z2_descriptor(parse_bits("1010"), 4)
        assert d.eval_full(parse_bits("1100")) == 1

    def test_zero_mask_rejected(self):
        with pytest.raises(ValueError):
            z2_descriptor(0, 4)


class TestFixSector:
    def test_particle_number(self):
        ens = fix_sector([particle_number(4, 0)], hf_state(4, 2))
        assert ens.s_ref == (2,)

    def test_combined_on_reference_determinant(self):
        ens = fix_sector([particle_number(12, 0), spin_projection(12)], hf_state(12, 4))
        assert ens.s_ref == (4, 0)

    def test_z2(self):
        ens = fix_sector([z2_descriptor(0b11, 2)], 0b11)
        assert ens.s_ref == (0,)


def random_descriptor(rng, n):
    kind = rng.choice(["pn", "sz", "mag", "z2", "free"])
    if kind == "pn":
        return particle_number(n, int(rng.integers(0, n + 1)))
    if kind == "sz" and n % 2 == 0:
        return spin_projection(n)
    if kind == "mag":
        return magnetization(n)
    if kind == "z2":
        return z2_descriptor(int(rng.integers(1, 2**n)), n)
    lam = rng.integers(-2, 3, size=(n, 2))
    return SymmetryDescriptor("free_additive", "additive", lam)


def test_local_decomposability_exhaustive(rng):
    # full eigenvalue equals the left fold of per-qubit values
    for n in (3, 7, 12):
        for _ in range(4):
            d = random_descriptor(rng, n)
            for x in range(2**n):
                acc = 0
                for i in range(n):
                    acc = d.compose(acc, d.local(i, (x >> i) & 1))
                assert acc == d.eval_full(x)
            batch = d.eval_full_batch(np.arange(2**n, dtype=np.uint64))
            singles = np.array([d.eval_full(x) for x in range(2**n)])
            assert (batch == singles).all()


def test_spectrum_bounds():
    for n in (4, 9, 12):
        assert particle_number(n, 0).spectrum_size <= n + 1
        assert magnetization(n).spectrum_size <= 2 * n + 1  # doubled values
        if n % 2 == 0:
            assert spin_projection(n).spectrum_size <= n + 1
        assert z2_descriptor(1, n).spectrum_size == 2


def test_prefix_partial_value_counts(rng):
    # at any level the number of distinct partial eigenvalues stays small:
    # <= level+1 for the 0/1-valued additive descriptors, <= 2 for parities
    n = 10
    for d, bound in ((particle_number(n, 3), n + 1), (z2_descriptor(0b1011, n), 2)):
        for level_bits in range(n + 1):
            vals = {
                d.eval_prefix(x, level_bits) for x in range(2**level_bits)
            }
            assert len(vals) <= bound


class TestEnsemble:
    def test_requires_refs(self):
        with pytest.raises(ValueError):
            SymmetryEnsemble([magnetization(4)])

    def test_mixed_eval_and_membership(self):
        ens = SymmetryEnsemble([particle_number(4, 2), z2_descriptor(0b0011, 4, ref=0)])
        assert ens.eval(parse_bits("1100")) == (2, 0)
        assert ens.in_sector(parse_bits("1100"))
        assert not ens.in_sector(parse_bits("1000"))
        xs = np.arange(16, dtype=np.uint64)
        member = ens.in_sector_batch(xs)
        singles = np.array([ens.in_sector(int(x)) for x in xs])
        assert (member == singles).all()

    def test_qubit_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SymmetryEnsemble([particle_number(4, 2), magnetization(6, 0)])

    def test_multiplicative_ref_must_be_parity(self):
        with pytest.raises(ValueError):
            SymmetryEnsemble([z2_descriptor(1, 2, ref=2)])


class TestHamiltonianCompatibility:
    def test_heisenberg_preserves_magnetization(self):
        h = build_heisenberg(6)
        ens = SymmetryEnsemble([magnetization(6, 0)])
        check_hamiltonian_compatibility(h, ens, n_probes=300)

    def test_violating_hamiltonian_detected(self):
        h = QubitHamiltonian(2, [PauliTerm(1.0, "XI")])
        ens = SymmetryEnsemble([particle_number(2, 1)])
        with pytest.raises(ValueError):
            check_hamiltonian_compatibility(h, ens, n_probes=300)

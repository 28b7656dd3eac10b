import numpy as np
import pytest

from anqs.masking import MaskingContext, PruneStrategy
from anqs.network import ANQSModel
from anqs.physicality import PhysicalityOracle
from anqs.sampler import SamplingStatistics, sample_binomial, sample_statistics
from anqs.symmetry import SymmetryEnsemble, particle_number
from chisq import chi_square_gof_pvalue, chi_square_homogeneity_pvalue
from conftest import randomized_model


def make_ctx(n, ne, strategy):
    oracle = PhysicalityOracle(SymmetryEnsemble([particle_number(n, ne)]))
    return MaskingContext(oracle, PruneStrategy.parse(strategy))


def masked_born(model, ctx):
    sector = np.array(ctx.oracle.sector_vectors(), dtype=np.uint64)
    lp = model.log_psi_batch(ctx, sector)
    return sector, np.exp(2 * lp.real)


def raw_born_restricted(model, ctx):
    sector = np.array(ctx.oracle.sector_vectors(), dtype=np.uint64)
    lp = model.log_psi_batch(None, sector)
    p = np.exp(2 * lp.real)
    return sector, p / p.sum()


def total_variation(stats, sector, probs, denominator):
    emp = {int(x): c / denominator for x, c in zip(stats.configurations, stats.counts)}
    return 0.5 * sum(abs(emp.get(int(x), 0.0) - p) for x, p in zip(sector, probs))


def sample_paths(model, ctx, n_samples, rng):
    """Reference sampler: independent root-to-leaf Bernoulli walks."""
    n = model.n_qubits
    counts: dict[int, int] = {}
    for _ in range(n_samples):
        x = 0
        key = tuple([0] * ctx.oracle.ensemble.n_symmetries)
        alive = True
        for i in range(1, n + 1):
            pair = model.masked_conditional_log_amps(ctx, i, x, key) \
                if ctx.masks_level(i) else model.conditional_log_amps(i, x)
            p1 = float(np.exp(2 * pair[1].real))
            bit = int(rng.random() < p1)
            child_key = []
            for d, v in zip(ctx.oracle.ensemble.descriptors, key):
                nv = v + d.local(i - 1, bit)
                child_key.append(nv & 1 if d.kind == "multiplicative" else nv)
            key = tuple(child_key)
            if not ctx.oracle.is_phys(i + 1, key):
                alive = False  # discard-unphysical: the sample dies here
                break
            x |= bit << (i - 1)
        if alive:
            counts[x] = counts.get(x, 0) + 1
    return counts


class TestSampleBinomial:
    def test_degenerate_probabilities(self, rng):
        gen = np.random.default_rng(0)
        assert sample_binomial(17, 0.0, gen) == 0
        assert sample_binomial(17, 1.0, gen) == 17
        assert sample_binomial(0, 0.5, gen) == 0

    def test_tolerates_round_off_only(self):
        gen = np.random.default_rng(0)
        assert sample_binomial(5, 1.0 + 5e-13, gen) == 5
        with pytest.raises(ValueError):
            sample_binomial(5, 1.01, gen)
        with pytest.raises(ValueError):
            sample_binomial(5, -0.1, gen)
        with pytest.raises(ValueError):
            sample_binomial(-1, 0.5, gen)

    def test_huge_trial_counts_stay_cheap(self):
        gen = np.random.default_rng(1)
        k = sample_binomial(10**12, 0.25, gen)
        assert abs(k - 0.25 * 10**12) < 1e7  # within ~20 sigma

    def test_goodness_of_fit_against_exact_pmf(self):
        import math

        n, p, draws = 30, 0.3, 10**5
        gen = np.random.default_rng(2024)
        ks = gen.binomial(n, p, size=draws)
        observed = np.bincount(ks, minlength=n + 1)
        pmf = np.array([math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)])
        assert chi_square_gof_pvalue(observed, pmf) > 1e-3


class TestSampleStatistics:
    def test_single_leaf_sector(self):
        ctx = make_ctx(2, 2, "mu")
        model = ANQSModel(2, hidden=4, seed=0)
        stats = sample_statistics(model, ctx, 7, 5)
        assert stats.n_unique == 1
        assert int(stats.configurations[0]) == 0b11
        assert stats.counts[0] == 7
        assert stats.retained == stats.requested == 7

    def test_mu_zero_never_loses_samples(self):
        model = randomized_model(6, hidden=5, seed=1)
        ctx = make_ctx(6, 3, "mu")
        for n_samples in (1, 13, 10**4):
            stats = sample_statistics(model, ctx, n_samples, 7)
            assert stats.retained == n_samples
            assert stats.counts.sum() == n_samples
            assert (stats.counts > 0).all()
            # zero-count children are never expanded
            assert stats.n_unique <= min(n_samples, ctx.oracle.sector_size)

    def test_mu_matches_masked_born(self):
        model = randomized_model(4, hidden=6, seed=2)
        ctx = make_ctx(4, 2, "mu")
        stats = sample_statistics(model, ctx, 10**6, 11)
        sector, probs = masked_born(model, ctx)
        assert total_variation(stats, sector, probs, stats.requested) < 0.02

    def test_du_matches_renormalized_raw_born(self):
        model = randomized_model(4, hidden=6, seed=3)
        ctx = make_ctx(4, 2, "du")
        stats = sample_statistics(model, ctx, 10**6, 13)
        assert stats.retained <= stats.requested
        sector, probs = raw_born_restricted(model, ctx)
        assert total_variation(stats, sector, probs, stats.retained) < 0.02
        popcounts = np.array([bin(int(x)).count("1") for x in stats.configurations])
        assert (popcounts == 2).all()

    def test_emitted_samples_always_in_sector(self):
        for strategy in ("mu", "mu-2", "du"):
            model = randomized_model(6, hidden=5, seed=4)
            ctx = make_ctx(6, 3, strategy)
            stats = sample_statistics(model, ctx, 10**4, 17)
            assert ctx.oracle.in_sector_batch(stats.configurations).all()
            assert stats.n_unique <= ctx.oracle.sector_size

    def test_mu_d_loses_samples_only_in_tail(self):
        model = randomized_model(6, hidden=5, seed=5)
        full = sample_statistics(model, make_ctx(6, 3, "mu"), 10**4, 19)
        tail = sample_statistics(model, make_ctx(6, 3, "mu-2"), 10**4, 19)
        assert full.retained == 10**4
        assert tail.retained <= 10**4

    def test_deterministic_given_seed(self):
        model = randomized_model(5, hidden=5, seed=6)
        ctx = make_ctx(5, 2, "mu-1")
        a = sample_statistics(model, ctx, 10**5, 23)
        b = sample_statistics(model, ctx, 10**5, 23)
        assert np.array_equal(a.configurations, b.configurations)
        assert np.array_equal(a.counts, b.counts)
        c = sample_statistics(model, ctx, 10**5, 24)
        assert not (
            len(a.counts) == len(c.counts) and np.array_equal(a.counts, c.counts)
        )

    def test_invalid_requests(self):
        model = ANQSModel(2, hidden=3, seed=0)
        ctx = make_ctx(2, 1, "mu")
        with pytest.raises(ValueError):
            sample_statistics(model, ctx, 0, 1)


class TestStatisticsPathEquivalence:
    """Binomial count propagation against independent per-sample walks."""

    @pytest.mark.parametrize("strategy", ["mu", "du"])
    def test_count_distribution_matches(self, strategy):
        n, ne, n_samples, reps = 3, 1, 16, 3000
        model = randomized_model(n, hidden=4, seed=8)
        ctx = make_ctx(n, ne, strategy)
        target = int(ctx.oracle.sector_vectors()[0])
        stat_counts = np.zeros(n_samples + 1, dtype=int)
        path_counts = np.zeros(n_samples + 1, dtype=int)
        walk_rng = np.random.default_rng(99)
        for rep in range(reps):
            stats = sample_statistics(model, ctx, n_samples, (31, rep))
            got = dict(zip(map(int, stats.configurations), map(int, stats.counts)))
            stat_counts[got.get(target, 0)] += 1
            walked = sample_paths(model, ctx, n_samples, walk_rng)
            path_counts[walked.get(target, 0)] += 1
        p = chi_square_homogeneity_pvalue(stat_counts, path_counts)
        assert p > 1e-3


def test_empty_statistics_flagged_not_raised():
    stats = SamplingStatistics(
        np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64), 10, 0
    )
    assert stats.is_empty
    with pytest.raises(ValueError):
        stats.weights()

import math

import numpy as np
import pytest

from eprloss.experiment import ExperimentConfig, build_number_difference, closed_form_variance
from eprloss.fluctuation import FluctuationOperator, linear_combine, quadrature
from eprloss.montecarlo import (
    BLOCK_SIZE,
    SamplerConfig,
    block_generator,
    sample_iterated_bounce,
    sample_operator,
    sample_values,
)
from eprloss.reservoir import VACUUM_VARIANCE, BounceChannel, iterated_bounce


def random_operator(rng):
    n = int(rng.integers(1, 5))
    modes = rng.choice(10, size=n, replace=False)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    return FluctuationOperator(dict(zip(modes.tolist(), w.tolist())))


class TestSamplerConfig:
    def test_zero_samples(self):
        with pytest.raises(ValueError):
            SamplerConfig(0)

    @pytest.mark.parametrize("seed", [-1, 2 ** 64])
    def test_seed_range(self, seed):
        with pytest.raises(ValueError):
            SamplerConfig(10, seed=seed)

    @pytest.mark.parametrize("seed", ["7", 1.5, True])
    def test_seed_type(self, seed):
        with pytest.raises(TypeError):
            SamplerConfig(10, seed=seed)

    def test_blocks(self):
        cfg = SamplerConfig(BLOCK_SIZE * 3 + 1, chunk_size=BLOCK_SIZE + 1)
        assert cfg.n_blocks == 4
        assert cfg.blocks_per_chunk == 2


class TestSampleOperator:
    def test_empty(self):
        rep = sample_operator(FluctuationOperator({}), SamplerConfig(1000))
        assert rep.sample_variance == 0.0
        assert rep.z_score == 0.0

    def test_quadrature(self):
        rep = sample_operator(quadrature(1, 0.0), SamplerConfig(10 ** 6, seed=2))
        assert rep.sample_variance == pytest.approx(0.5, abs=0.005)
        assert abs(rep.z_score) < 4
        assert rep.standard_error == pytest.approx(rep.sample_variance * math.sqrt(2e-6))

    def test_number_difference(self):
        cfg = ExperimentConfig(r=0.5, s=0.5).with_relative_phases(0.7, -0.7)
        rep = sample_operator(build_number_difference(cfg), SamplerConfig(10 ** 6, seed=3))
        assert rep.analytic_variance == pytest.approx(closed_form_variance(cfg), rel=1e-12)
        assert abs(rep.z_score) < 4

    def test_sample_normalization(self):
        # real and imaginary parts each carry variance 1/4
        rng = block_generator(5, 0)
        z = rng.normal(0.0, 0.5, size=(200_000, 2))
        assert np.var(z, axis=0) == pytest.approx([0.25, 0.25], rel=0.02)

    def test_values_match_moments(self):
        x = quadrature(1, 0.3) - quadrature(4, 1.2)
        cfg = SamplerConfig(3 * BLOCK_SIZE + 17, seed=8)
        values = sample_values(x, cfg)
        assert values.size == cfg.n_samples
        assert np.var(values, ddof=1) == pytest.approx(sample_operator(x, cfg).sample_variance, rel=1e-12)

    def test_standard_error_positive(self):
        rep = sample_operator(quadrature(0, 0), SamplerConfig(2))
        assert rep.standard_error > 0


class TestDeterminism:
    x = linear_combine([(1.0, quadrature(1, 0.2)), (-0.7, quadrature(2, 1.0)), (0.3, quadrature(3, 2.0))])

    def test_same_seed_identical(self):
        a = sample_operator(self.x, SamplerConfig(100_000, seed=11))
        b = sample_operator(self.x, SamplerConfig(100_000, seed=11))
        assert a.sample_variance == b.sample_variance

    @pytest.mark.parametrize("chunk_size", [1, 5000, BLOCK_SIZE, 3 * BLOCK_SIZE, 10 ** 6])
    @pytest.mark.parametrize("workers", [1, 3])
    def test_chunking_invariant(self, chunk_size, workers):
        ref = sample_operator(self.x, SamplerConfig(100_003, seed=12))
        got = sample_operator(self.x, SamplerConfig(100_003, seed=12, chunk_size=chunk_size, workers=workers))
        assert got.sample_variance == ref.sample_variance

    def test_seed_changes_result(self):
        a = sample_operator(self.x, SamplerConfig(10_000, seed=1))
        b = sample_operator(self.x, SamplerConfig(10_000, seed=2))
        assert a.sample_variance != b.sample_variance

    def test_bounce_chunking_invariant(self):
        ch = BounceChannel(0.2, 1.0)
        a = sample_iterated_bounce(ch, 5, 0.3, SamplerConfig(50_000, seed=4))
        b = sample_iterated_bounce(ch, 5, 0.3, SamplerConfig(50_000, seed=4, chunk_size=1, workers=4))
        assert a.sample_variance == b.sample_variance


class TestLinearity:
    x = quadrature(1, 0.4) + quadrature(2, 2.2)

    @pytest.mark.parametrize("a", [2.0, 0.25, -4.0])
    def test_power_of_two_exact(self, a):
        cfg = SamplerConfig(50_000, seed=21)
        base = sample_operator(self.x, cfg).sample_variance
        scaled = sample_operator(a * self.x, cfg).sample_variance
        assert scaled == a * a * base

    @pytest.mark.parametrize("a", [0.3, -1.7, 12.5])
    def test_general_scale(self, a):
        cfg = SamplerConfig(50_000, seed=21)
        base = sample_operator(self.x, cfg).sample_variance
        scaled = sample_operator(a * self.x, cfg).sample_variance
        assert scaled == pytest.approx(a * a * base, rel=1e-13)


class TestIteratedBounceSampling:
    def test_no_bounce(self):
        rep = sample_iterated_bounce(BounceChannel(0.3, 1.0), 0, 0.2, SamplerConfig(200_000, seed=1))
        assert rep.analytic_variance == pytest.approx(0.04)
        assert abs(rep.z_score) < 4

    def test_full_swap(self):
        rep = sample_iterated_bounce(math.pi / 2, 1, 0.05, SamplerConfig(200_000, seed=2))
        assert rep.analytic_variance == pytest.approx(VACUUM_VARIANCE, abs=1e-15)
        assert abs(rep.z_score) < 4

    def test_squeezed_decay(self):
        ch = BounceChannel(0.1, 1.0)
        std = math.sqrt(VACUUM_VARIANCE) * math.exp(-1)
        rep = sample_iterated_bounce(ch, 200, std, SamplerConfig(10 ** 5, seed=3))
        assert rep.analytic_variance == pytest.approx(iterated_bounce(ch, 200, std ** 2)[1], rel=1e-15)
        assert abs(rep.z_score) < 4


class TestJointRealization:
    def test_values_are_linear_across_operators(self):
        x, y = quadrature(1, 0.3), quadrature(4, 1.1) - quadrature(2, 0.2)
        cfg = SamplerConfig(20_000, seed=9)
        joint = sample_values(x + y, cfg)
        assert np.allclose(joint, sample_values(x, cfg) + sample_values(y, cfg), rtol=0, atol=1e-12)

    def test_disjoint_operators_uncorrelated(self):
        cfg = SamplerConfig(200_000, seed=10)
        a = sample_values(quadrature(1, 0), cfg)
        b = sample_values(quadrature(2, 0), cfg)
        # correlation of independent modes has standard error 1/sqrt(n)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(cfg.n_samples)


def _seed_averaged_deviations():
    rng = np.random.default_rng(31415)
    n = 10 ** 5
    out = []
    for _ in range(20):
        x = random_operator(rng)
        reps = [sample_operator(x, SamplerConfig(n, seed=s)) for s in range(50)]
        mean = np.mean([r.sample_variance for r in reps])
        pooled = math.sqrt(sum(r.standard_error ** 2 for r in reps)) / len(reps)
        out.append((mean - reps[0].analytic_variance) / pooled)
    return np.array(out)


def test_unbiasedness():
    """Mean over 50 seeds vs analytic variance, 20 operators, in pooled SE units."""
    d = _seed_averaged_deviations()
    print("seed-averaged deviations:", np.round(d, 2))
    # family-wise bound: P(any |d| > 4) ~ 1e-3 for an unbiased sampler
    assert np.all(np.abs(d) < 4)
    # a 2-SE rule per operator is a ~5% test applied 20 times; bound the count instead
    # (P(5 or more of 20 beyond 2 SE) ~ 0.3% for an unbiased sampler)
    assert np.sum(np.abs(d) >= 2) <= 4


def test_no_bias_many_seeds():
    x = quadrature(1, 0.4) - quadrature(3, 1.9) + quadrature(5, 0.1)
    z = [sample_operator(x, SamplerConfig(10_000, seed=s)).z_score for s in range(1000)]
    assert abs(np.mean(z)) * math.sqrt(len(z)) < 4

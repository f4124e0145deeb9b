import math

import numpy as np
import pytest

from syncq.dists import (
    ConditionalOnCap, DeterministicService, DeterministicSize, EmpiricalSize,
    ExponentialService, MinWithCap, MixedPoissonPareto, ServiceModel,
    UniformService,
    job_size_mean, job_size_moment, sample_fragments, sample_job_size,
    sample_job_sizes, sample_size_biased_job_sizes, sample_service,
    service_mean, service_mgf, service_mgf_domain, service_weighted_mgf,
    size_biased_mean, size_cap, truncation_acceptance,
)
from syncq.errors import DegenerateTruncationError, InfiniteMomentError, MGFDomainError
from syncq.rng import RandomStream


# ---------------------------------------------------------------------------
# job sizes

def test_deterministic_point_mass():
    rng = RandomStream(1)
    assert sample_job_size(DeterministicSize(3), None, rng) == 3
    assert np.all(sample_job_sizes(DeterministicSize(3), None, rng, 100) == 3)


def test_min_cap_forces_one():
    dist = EmpiricalSize(((1, 0.5), (2, 0.5)))
    draws = sample_job_sizes(dist, MinWithCap(1), RandomStream(2), 1000)
    assert np.all(draws == 1)


def test_mixed_poisson_pareto_mean_en2():
    # E[N] = 1 + alpha*beta/(alpha-1) = 2 for (3, 2/3); sampled mean to 0.01
    dist = MixedPoissonPareto(3.0, 2.0 / 3.0)
    draws = sample_job_sizes(dist, None, RandomStream(3), 10 ** 6)
    assert abs(draws.mean() - 2.0) < 0.01
    assert draws.min() >= 1


def test_mixed_poisson_pareto_sampled_mean_en10():
    dist = MixedPoissonPareto(3.0, 6.0)
    draws = sample_job_sizes(dist, None, RandomStream(4), 10 ** 6)
    # 4 standard errors of the exact mean 10
    se = draws.std() / math.sqrt(draws.size)
    assert abs(draws.mean() - 10.0) < 4 * se


def test_moments_closed_forms():
    assert job_size_moment(DeterministicSize(2), None, 1.0) == 2.0
    assert job_size_moment(EmpiricalSize(((1, 0.5), (3, 0.5))), None, 2.0) == pytest.approx(5.0)
    assert job_size_moment(MixedPoissonPareto(3.0, 6.0), None, 1.0) == pytest.approx(10.0, abs=1e-6)
    assert job_size_mean(MixedPoissonPareto(3.0, 2.0 / 3.0)) == pytest.approx(2.0)


def test_moment_against_sampling():
    dist = MixedPoissonPareto(3.0, 2.0 / 3.0)
    m2 = job_size_moment(dist, None, 2.0)
    assert m2 == pytest.approx(16.0 / 3.0, rel=1e-8)   # 1 + 3 E[L] + E[L^2]
    draws = sample_job_sizes(dist, None, RandomStream(5), 10 ** 6).astype(float)
    se = (draws ** 2).std() / math.sqrt(draws.size)
    assert abs((draws ** 2).mean() - m2) < 4 * se


def test_truncated_moments_and_monotonicity():
    dist = MixedPoissonPareto(3.0, 2.0 / 3.0)
    caps = [1, 2, 4, 8, 16, 64, 256]
    means = [job_size_moment(dist, MinWithCap(m), 1.0) for m in caps]
    assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))
    assert means[0] == pytest.approx(1.0)
    assert means[-1] == pytest.approx(2.0, abs=1e-4)
    # capped draws never exceed the cap
    draws = sample_job_sizes(dist, MinWithCap(5), RandomStream(6), 20000)
    assert draws.max() <= 5
    assert job_size_moment(dist, MinWithCap(5), 1.0) == pytest.approx(draws.mean(), abs=0.02)


def test_conditional_truncation():
    dist = EmpiricalSize(((1, 0.25), (2, 0.25), (10, 0.5)))
    draws = sample_job_sizes(dist, ConditionalOnCap(2), RandomStream(7), 40000)
    assert set(np.unique(draws)) == {1, 2}
    assert abs((draws == 1).mean() - 0.5) < 0.01
    assert job_size_moment(dist, ConditionalOnCap(2), 1.0) == pytest.approx(1.5)
    mpp = MixedPoissonPareto(3.0, 2.0 / 3.0)
    cond = sample_job_sizes(mpp, ConditionalOnCap(3), RandomStream(8), 40000)
    assert cond.max() <= 3
    assert job_size_moment(mpp, ConditionalOnCap(3), 1.0) == pytest.approx(cond.mean(), abs=0.02)


def test_degenerate_truncation_errors():
    with pytest.raises(DegenerateTruncationError):
        sample_job_sizes(DeterministicSize(5), ConditionalOnCap(2), RandomStream(9), 10)
    with pytest.raises(DegenerateTruncationError):
        job_size_moment(EmpiricalSize(((4, 1.0),)), ConditionalOnCap(2), 1.0)


def test_infinite_moment_error():
    with pytest.raises(InfiniteMomentError):
        job_size_moment(MixedPoissonPareto(3.0, 1.0), None, 3.0)
    # truncation bounds the law, so the same order is finite
    assert job_size_moment(MixedPoissonPareto(3.0, 1.0), MinWithCap(50), 3.0) < 50.0 ** 3


def test_pmf_validation():
    with pytest.raises(ValueError):
        EmpiricalSize(((1, 0.5), (2, 0.6)))
    with pytest.raises(ValueError):
        EmpiricalSize(((0, 1.0),))
    with pytest.raises(ValueError):
        MixedPoissonPareto(1.0, 1.0)


def test_size_cap():
    assert size_cap(DeterministicSize(4), None) == 4
    assert size_cap(MixedPoissonPareto(3.0, 1.0), None) is None
    assert size_cap(MixedPoissonPareto(3.0, 1.0), MinWithCap(9)) == 9
    assert size_cap(EmpiricalSize(((2, 0.5), (6, 0.5))), ConditionalOnCap(4)) == 4


def test_truncation_acceptance():
    assert truncation_acceptance(DeterministicSize(3), 2) == 0.0
    assert truncation_acceptance(EmpiricalSize(((1, 0.25), (9, 0.75))), 5) == pytest.approx(0.25)


def test_size_biased_law():
    emp = EmpiricalSize(((1, 0.5), (3, 0.5)))
    draws = sample_size_biased_job_sizes(emp, RandomStream(10), 200_000)
    # P(K = 3) = 3*0.5/2 = 0.75
    assert abs((draws == 3).mean() - 0.75) < 0.005
    mpp = MixedPoissonPareto(3.0, 2.0 / 3.0)
    sb = sample_size_biased_job_sizes(mpp, RandomStream(11), 400_000)
    target = size_biased_mean(mpp)
    assert target == pytest.approx(16.0 / 6.0, rel=1e-8)
    assert abs(sb.mean() - target) < 4 * sb.std() / math.sqrt(sb.size)
    # pointwise pmf check against k f(k) / E[N]
    plain = sample_job_sizes(mpp, None, RandomStream(12), 400_000)
    for k in (1, 2, 3, 5):
        expect = k * (plain == k).mean() / 2.0
        assert abs((sb == k).mean() - expect) < 0.006


def test_size_biased_requires_second_moment():
    with pytest.raises(InfiniteMomentError):
        sample_size_biased_job_sizes(MixedPoissonPareto(1.5, 1.0), RandomStream(13), 10)


# ---------------------------------------------------------------------------
# services

def test_mgf_values():
    assert service_mgf(UniformService(0, 1), 1.0) == pytest.approx(math.e - 1.0)
    assert service_mgf(UniformService(0, 1), 0.0) == 1.0
    assert service_mgf(ExponentialService(1.0), 0.5) == pytest.approx(2.0)
    assert service_mgf(DeterministicService(2.0), 0.0) == 1.0
    assert service_mgf(DeterministicService(0.5), 3.0) == pytest.approx(math.exp(1.5))


def test_weighted_mgf_values():
    assert service_weighted_mgf(UniformService(0, 1), 0.0) == pytest.approx(0.5)
    assert service_weighted_mgf(DeterministicService(2.0), 1.0) == pytest.approx(2.0 * math.e ** 2)
    assert service_weighted_mgf(ExponentialService(1.0), 0.5) == pytest.approx(4.0)
    assert service_mean(UniformService(0.2, 0.8)) == pytest.approx(0.5)


def test_mgf_domain():
    assert service_mgf_domain(ExponentialService(2.0)) == 2.0
    assert math.isinf(service_mgf_domain(UniformService(0, 1)))
    with pytest.raises(MGFDomainError):
        service_mgf(ExponentialService(1.0), 1.0)
    with pytest.raises(MGFDomainError):
        service_weighted_mgf(ExponentialService(1.0), 1.5)


def test_weighted_mgf_is_mgf_derivative():
    # |E[chi e^{t chi}] - d/dt E[e^{t chi}]| < 1e-6 on a grid, per family
    h = 1e-5
    families = [UniformService(0, 1), UniformService(0.3, 2.5),
                ExponentialService(2.0), DeterministicService(0.7)]
    for fam in families:
        sup = service_mgf_domain(fam)
        grid = np.linspace(-1.0, min(2.0, sup - 0.2 if math.isfinite(sup) else 2.0), 13)
        for t in grid:
            num = (service_mgf(fam, t + h) - service_mgf(fam, t - h)) / (2 * h)
            assert abs(service_weighted_mgf(fam, t) - num) < 1e-6


def test_sample_fragments():
    det = ServiceModel(DeterministicService(0.5))
    assert np.allclose(sample_fragments(det, 3, RandomStream(14)), 0.5)
    uni = ServiceModel(UniformService(0, 1))
    one = sample_fragments(uni, 1, RandomStream(15))
    assert 0.0 <= one[0] <= 1.0
    with pytest.raises(ValueError):
        sample_fragments(uni, 0, RandomStream(16))


def test_default_joint_is_independent():
    # sample correlation of the two coordinates of size-2 jobs ~ 0 +- 0.005
    gen = RandomStream(17).generator
    pairs = np.column_stack([sample_service(UniformService(0, 1), gen, 10 ** 6),
                             sample_service(UniformService(0, 1), gen, 10 ** 6)])
    corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
    assert abs(corr) < 0.005


def test_custom_joint_sampler():
    def comonotone(marginal, k, gen):
        u = gen.random()
        return np.full(k, marginal.a + (marginal.b - marginal.a) * u)

    model = ServiceModel(UniformService(0, 1), joint=comonotone)
    frags = sample_fragments(model, 4, RandomStream(18))
    assert np.allclose(frags, frags[0])


# ---------------------------------------------------------------------------
# random streams

def test_stream_reproducibility():
    a = RandomStream(123, 5).generator.random(64)
    b = RandomStream(123, 5).generator.random(64)
    assert np.array_equal(a, b)
    c = RandomStream(123, 6).generator.random(64)
    assert not np.array_equal(a, c)
    d = RandomStream(124, 5).generator.random(64)
    assert not np.array_equal(a, d)


def test_substreams_distinct():
    rs = RandomStream(9)
    a = rs.substream(0).generator.random(32)
    b = rs.substream(1).generator.random(32)
    assert not np.array_equal(a, b)
    again = RandomStream(9).substream(0).generator.random(32)
    assert np.array_equal(a, again)


def test_keyed_generators_stable():
    rs = RandomStream(9)
    a = rs.keyed_generator((1, 2)).random(8)
    b = rs.keyed_generator((1, 2)).random(8)
    assert np.array_equal(a, b)
    c = rs.keyed_generator((1, 3)).random(8)
    assert not np.array_equal(a, c)

"""Job-size and fragment-service distributions.

Job sizes: the piece count N of an arriving job, always >= 1.  Supported
families are a point mass, an empirical pmf, and the heavy-tailed mixed
Poisson law N = 1 + Poisson(L) with L drawn from a Pareto(shape, scale)
density  shape*scale^shape / x^(shape+1)  on [scale, inf).  Under that
convention E[N] = 1 + shape*scale/(shape-1).

Finite systems truncate N at a cap m, either as min(N, m) or by
conditioning on N <= m.

Services: the marginal law B of a single fragment requirement plus a joint
sampler producing the vector for a size-k job (independent draws from the
marginal unless a custom joint sampler is supplied).  Exponential moment
transforms E[e^(t*chi)] and E[chi*e^(t*chi)] are closed-form per family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate
from scipy import stats as _sps

from .errors import DegenerateTruncationError, InfiniteMomentError, MGFDomainError
from .rng import RandomStream

__all__ = [
    "DeterministicSize", "MixedPoissonPareto", "EmpiricalSize", "JobSizeDistribution",
    "MinWithCap", "ConditionalOnCap", "Truncation",
    "UniformService", "ExponentialService", "DeterministicService", "ServiceMarginal",
    "ServiceModel",
    "sample_job_size", "sample_job_sizes", "sample_size_biased_job_sizes",
    "job_size_moment", "job_size_mean", "size_biased_mean", "size_cap",
    "truncation_acceptance",
    "service_mgf", "service_weighted_mgf", "service_mean", "service_mgf_domain",
    "sample_service", "sample_fragments",
]

_PMF_TOL = 1e-12


# ---------------------------------------------------------------------------
# job-size laws

@dataclass(frozen=True)
class DeterministicSize:
    """Point mass: every job has exactly k pieces."""
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("job size must be >= 1")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class MixedPoissonPareto:
    """N = 1 + Poisson(L), L ~ Pareto(alpha, beta) on [beta, inf)."""
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError("Pareto shape alpha must exceed 1 (finite mean)")
        if not self.beta > 0.0:
            raise ValueError("Pareto scale beta must be positive")

    @property
    def mean(self) -> float:
        return 1.0 + self.alpha * self.beta / (self.alpha - 1.0)


@dataclass(frozen=True)
class EmpiricalSize:
    """Finite pmf over sizes k >= 1; probabilities must sum to one."""
    pmf: tuple[tuple[int, float], ...]

    def __post_init__(self):
        items = tuple((int(k), float(p)) for k, p in self.pmf)
        if not items:
            raise ValueError("empirical pmf is empty")
        if any(k < 1 for k, _ in items):
            raise ValueError("job sizes must be >= 1 (no size-0 jobs)")
        if any(p < 0 for _, p in items):
            raise ValueError("pmf probabilities must be nonnegative")
        total = math.fsum(p for _, p in items)
        if abs(total - 1.0) > _PMF_TOL:
            raise ValueError(f"pmf probabilities sum to {total!r}, not 1 within {_PMF_TOL}")
        object.__setattr__(self, "pmf", tuple(sorted(items)))

    def support(self) -> np.ndarray:
        return np.array([k for k, _ in self.pmf], dtype=np.int64)

    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.pmf], dtype=float)


JobSizeDistribution = Union[DeterministicSize, MixedPoissonPareto, EmpiricalSize]


@dataclass(frozen=True)
class MinWithCap:
    """Truncate as min(N, m)."""
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("truncation cap must be >= 1")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class ConditionalOnCap:
    """Truncate by conditioning on N <= m."""
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("truncation cap must be >= 1")
        object.__setattr__(self, "m", int(self.m))


Truncation = Optional[Union[MinWithCap, ConditionalOnCap]]


def size_cap(dist: JobSizeDistribution, trunc: Truncation) -> Optional[int]:
    """Largest size the truncated law can produce; None when unbounded."""
    if isinstance(dist, DeterministicSize):
        base: Optional[int] = dist.k
    elif isinstance(dist, EmpiricalSize):
        base = int(dist.support().max())
    else:
        base = None
    if trunc is None:
        return base
    return trunc.m if base is None else min(base, trunc.m)


# ---------------------------------------------------------------------------
# job-size sampling

def _sample_pareto(gen: np.random.Generator, alpha: float, beta: float, size: int) -> np.ndarray:
    # inversion; 1-U in (0,1] keeps the support edge at beta reachable
    return beta * (1.0 - gen.random(size)) ** (-1.0 / alpha)


def _sample_base(dist: JobSizeDistribution, gen: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(dist, DeterministicSize):
        return np.full(size, dist.k, dtype=np.int64)
    if isinstance(dist, EmpiricalSize):
        return gen.choice(dist.support(), size=size, p=dist.probs())
    mix = _sample_pareto(gen, dist.alpha, dist.beta, size)
    return 1 + gen.poisson(mix)


def truncation_acceptance(dist: JobSizeDistribution, m: int) -> float:
    """P(N <= m) for the untruncated law."""
    if isinstance(dist, DeterministicSize):
        return 1.0 if dist.k <= m else 0.0
    if isinstance(dist, EmpiricalSize):
        return float(math.fsum(p for k, p in dist.pmf if k <= m))
    return _mpp_prob_le(dist, m)


def sample_job_sizes(dist: JobSizeDistribution, trunc: Truncation,
                     rng: RandomStream | np.random.Generator, size: int) -> np.ndarray:
    """Vector of `size` draws from the (possibly truncated) job-size law."""
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    if trunc is None:
        return _sample_base(dist, gen, size)
    if isinstance(trunc, MinWithCap):
        return np.minimum(_sample_base(dist, gen, size), trunc.m)
    # conditional on N <= m: vectorized rejection with a degeneracy guard
    accept = truncation_acceptance(dist, trunc.m)
    if accept <= _PMF_TOL:
        raise DegenerateTruncationError(
            f"degenerate truncation: P(N <= {trunc.m}) = {accept:.3e}")
    if isinstance(dist, EmpiricalSize):
        keep = [(k, p) for k, p in dist.pmf if k <= trunc.m]
        ks = np.array([k for k, _ in keep], dtype=np.int64)
        ps = np.array([p for _, p in keep], dtype=float)
        return gen.choice(ks, size=size, p=ps / ps.sum())
    out = np.empty(size, dtype=np.int64)
    filled = 0
    while filled < size:
        want = size - filled
        batch = max(64, int(want / max(accept, 1e-6) * 1.2))
        draw = _sample_base(dist, gen, batch)
        good = draw[draw <= trunc.m]
        take = min(want, good.size)
        out[filled:filled + take] = good[:take]
        filled += take
    return out


def sample_job_size(dist: JobSizeDistribution, trunc: Truncation,
                    rng: RandomStream | np.random.Generator) -> int:
    """One draw; k <= cap whenever a truncation is given."""
    return int(sample_job_sizes(dist, trunc, rng, 1)[0])


def sample_size_biased_job_sizes(dist: JobSizeDistribution,
                                 rng: RandomStream | np.random.Generator,
                                 size: int) -> np.ndarray:
    """Draws from the size-biased law P(K = k) = k f(k) / E[N].

    This is the piece count of a job encountered in proportion to how many
    servers it occupies, which is how a queue position samples the job in
    front of it.  For the mixed Poisson-Pareto family the exact mixture
        K = 1 + Poisson(Pareto(alpha, beta))        w.p. 1/E[N]
        K = 2 + Poisson(Pareto(alpha - 1, beta))    otherwise
    is used (size-biasing a Pareto lowers its shape by one), which requires
    alpha > 2 so that E[N^2] is finite.
    """
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    if isinstance(dist, DeterministicSize):
        return np.full(size, dist.k, dtype=np.int64)
    if isinstance(dist, EmpiricalSize):
        ks = dist.support().astype(float)
        ps = dist.probs() * ks
        ps /= ps.sum()
        return gen.choice(dist.support(), size=size, p=ps)
    if not dist.alpha > 2.0:
        raise InfiniteMomentError(
            "infinite moment: size-biased sampling needs E[N^2] < inf (alpha > 2)")
    mean = dist.mean
    pick_plain = gen.random(size) < 1.0 / mean
    plain = 1 + gen.poisson(_sample_pareto(gen, dist.alpha, dist.beta, size))
    biased = 2 + gen.poisson(_sample_pareto(gen, dist.alpha - 1.0, dist.beta, size))
    return np.where(pick_plain, plain, biased)


# ---------------------------------------------------------------------------
# job-size moments

def _mpp_mix_expect(dist: MixedPoissonPareto, inner: Callable[[float], float]) -> float:
    """E[inner(L)] over the Pareto mixing law, via inversion substitution.

    With L = beta * u^(-1/alpha) the integral becomes int_0^1 inner(L(u)) du,
    which scipy's adaptive quadrature handles including the u -> 0 pull.
    """
    def f(u: float) -> float:
        lam = dist.beta * u ** (-1.0 / dist.alpha)
        return inner(lam)

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-11, limit=400)
    return val


def _poisson_terms(lam: float, jmax: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(0, jmax + 1)
    return j, _sps.poisson.pmf(j, lam)


def _mpp_inner_moment(lam: float, p: float, cap: Optional[int], mode: str) -> float:
    """E over P ~ Poisson(lam) of the requested moment functional of 1 + P."""
    jmax = int(lam + 12.0 * math.sqrt(lam + 1.0) + 60.0)
    if mode == "min" and cap is not None:
        hi = min(jmax, cap - 2)
        if hi >= 0:
            j, w = _poisson_terms(lam, hi)
            body = float(np.dot(w, (1.0 + j) ** p))
        else:
            body = 0.0
        tail = float(_sps.poisson.sf(cap - 2, lam)) if cap >= 2 else 1.0
        return body + float(cap) ** p * tail
    if mode == "cond_num" and cap is not None:
        hi = min(jmax, cap - 1)
        j, w = _poisson_terms(lam, hi)
        return float(np.dot(w, (1.0 + j) ** p))
    if mode == "cond_den" and cap is not None:
        return float(_sps.poisson.cdf(cap - 1, lam))
    j, w = _poisson_terms(lam, jmax)
    return float(np.dot(w, (1.0 + j) ** p))


def _mpp_prob_le(dist: MixedPoissonPareto, m: int) -> float:
    return _mpp_mix_expect(dist, lambda lam: _mpp_inner_moment(lam, 0.0, m, "cond_den"))


def job_size_moment(dist: JobSizeDistribution, trunc: Truncation, p: float) -> float:
    """E[N^p] of the truncated law.

    Closed form for point masses and empirical pmfs; adaptive mixing-law
    quadrature (relative error ~1e-9) for the mixed Poisson-Pareto family.
    Raises when the requested moment is infinite, i.e. p >= alpha with no
    bounding truncation.
    """
    if not p > 0:
        raise ValueError("moment order p must be positive")
    if isinstance(dist, DeterministicSize):
        k = dist.k if trunc is None else (
            min(dist.k, trunc.m) if isinstance(trunc, MinWithCap) else dist.k)
        if isinstance(trunc, ConditionalOnCap) and dist.k > trunc.m:
            raise DegenerateTruncationError(
                f"degenerate truncation: P(N <= {trunc.m}) = 0")
        return float(k) ** p
    if isinstance(dist, EmpiricalSize):
        ks = dist.support().astype(float)
        ps = dist.probs()
        if trunc is None:
            return float(np.dot(ps, ks ** p))
        if isinstance(trunc, MinWithCap):
            return float(np.dot(ps, np.minimum(ks, trunc.m) ** p))
        mask = ks <= trunc.m
        den = ps[mask].sum()
        if den <= _PMF_TOL:
            raise DegenerateTruncationError(
                f"degenerate truncation: P(N <= {trunc.m}) = {den:.3e}")
        return float(np.dot(ps[mask], ks[mask] ** p) / den)
    # mixed Poisson-Pareto
    if trunc is None:
        if p >= dist.alpha:
            raise InfiniteMomentError(
                f"infinite moment: E[N^p] diverges for p = {p} >= alpha = {dist.alpha}")
        return _mpp_mix_expect(dist, lambda lam: _mpp_inner_moment(lam, p, None, "full"))
    if isinstance(trunc, MinWithCap):
        return _mpp_mix_expect(dist, lambda lam: _mpp_inner_moment(lam, p, trunc.m, "min"))
    den = _mpp_prob_le(dist, trunc.m)
    if den <= _PMF_TOL:
        raise DegenerateTruncationError(
            f"degenerate truncation: P(N <= {trunc.m}) = {den:.3e}")
    num = _mpp_mix_expect(dist, lambda lam: _mpp_inner_moment(lam, p, trunc.m, "cond_num"))
    return num / den


def job_size_mean(dist: JobSizeDistribution, trunc: Truncation = None) -> float:
    if trunc is None:
        if isinstance(dist, DeterministicSize):
            return float(dist.k)
        if isinstance(dist, MixedPoissonPareto):
            return dist.mean
    return job_size_moment(dist, trunc, 1.0)


def size_biased_mean(dist: JobSizeDistribution) -> float:
    """E[K] = E[N^2]/E[N] of the size-biased law (untruncated)."""
    return job_size_moment(dist, None, 2.0) / job_size_mean(dist)


# ---------------------------------------------------------------------------
# fragment services

@dataclass(frozen=True)
class UniformService:
    a: float
    b: float

    def __post_init__(self):
        if not (self.b > self.a >= 0.0):
            raise ValueError("Uniform service needs 0 <= a < b")


@dataclass(frozen=True)
class ExponentialService:
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("Exponential service rate must be positive")


@dataclass(frozen=True)
class DeterministicService:
    """Point mass; c = 0 (zero-work fragments) is allowed."""
    c: float

    def __post_init__(self):
        if self.c < 0.0:
            raise ValueError("service requirement must be nonnegative")


ServiceMarginal = Union[UniformService, ExponentialService, DeterministicService]

# custom joint sampler: (marginal, k, generator) -> length-k nonnegative vector
JointSampler = Callable[[ServiceMarginal, int, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class ServiceModel:
    """Marginal law B plus the joint sampler for a size-k job's fragments.

    The default joint is independent draws from the marginal; a custom
    sampler may induce dependence but must keep the marginals equal to B.
    """
    marginal: ServiceMarginal
    joint: Optional[JointSampler] = None


def sample_service(marginal: ServiceMarginal,
                   rng: RandomStream | np.random.Generator, size: int) -> np.ndarray:
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    if isinstance(marginal, UniformService):
        return marginal.a + (marginal.b - marginal.a) * gen.random(size)
    if isinstance(marginal, ExponentialService):
        return gen.exponential(1.0 / marginal.rate, size)
    return np.full(size, marginal.c, dtype=float)


def sample_fragments(model: ServiceModel, k: int,
                     rng: RandomStream | np.random.Generator) -> np.ndarray:
    """Service requirements (chi_1, ..., chi_k) of one size-k job."""
    if k < 1:
        raise ValueError("fragment count must be >= 1")
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    if model.joint is None:
        return sample_service(model.marginal, gen, k)
    out = np.asarray(model.joint(model.marginal, k, gen), dtype=float)
    if out.shape != (k,):
        raise ValueError("joint sampler must return a length-k vector")
    if np.any(out < 0):
        raise ValueError("joint sampler produced a negative requirement")
    return out


def service_mgf_domain(marginal: ServiceMarginal) -> float:
    """Supremum of t with E[e^(t*chi)] finite."""
    if isinstance(marginal, ExponentialService):
        return marginal.rate
    if isinstance(marginal, (UniformService, DeterministicService)):
        return math.inf
    # duck-typed fallback for user families exposing pdf/support
    if hasattr(marginal, "mgf_domain"):
        return float(marginal.mgf_domain())  # pragma: no cover
    raise TypeError(f"unknown service marginal {marginal!r}")


def _check_domain(marginal: ServiceMarginal, theta: float) -> None:
    sup = service_mgf_domain(marginal)
    if theta >= sup:
        raise MGFDomainError(f"MGF diverges: theta = {theta} outside domain (-inf, {sup})")


def service_mgf(marginal: ServiceMarginal, theta: float) -> float:
    """E[e^(theta*chi)]; closed form per family, exact 1 at theta = 0."""
    _check_domain(marginal, theta)
    if isinstance(marginal, DeterministicService):
        return math.exp(theta * marginal.c)
    if isinstance(marginal, ExponentialService):
        return marginal.rate / (marginal.rate - theta)
    a, b, w = marginal.a, marginal.b, marginal.b - marginal.a
    x = theta * w
    if x == 0.0:
        return 1.0
    return math.exp(theta * a) * math.expm1(x) / x


def service_weighted_mgf(marginal: ServiceMarginal, theta: float) -> float:
    """E[chi * e^(theta*chi)] = d/dtheta of the MGF."""
    _check_domain(marginal, theta)
    if isinstance(marginal, DeterministicService):
        return marginal.c * math.exp(theta * marginal.c)
    if isinstance(marginal, ExponentialService):
        return marginal.rate / (marginal.rate - theta) ** 2
    a, b = marginal.a, marginal.b
    w = b - a
    if abs(theta) * max(abs(a), abs(b), 1.0) < 1e-4:
        # series around 0 avoids cancellation in the exact quotient
        m1 = (a + b) / 2.0
        m2 = (a * a + a * b + b * b) / 3.0
        m3 = (a ** 3 + a * a * b + a * b * b + b ** 3) / 4.0
        return m1 + theta * m2 + 0.5 * theta * theta * m3
    num = (theta * b - 1.0) * math.exp(theta * b) - (theta * a - 1.0) * math.exp(theta * a)
    return num / (theta * theta * w)


def service_mean(marginal: ServiceMarginal) -> float:
    return service_weighted_mgf(marginal, 0.0)

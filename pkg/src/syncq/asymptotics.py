"""Stability and exponential tail analysis of the limiting waiting time.

Everything revolves around the weight transform

    g(beta) = E[N] * E[e^{beta chi}] * lambda* / (lambda* + beta),

which is log-convex with g(0) = E[N].  The system is stable when
min_beta g(beta) < 1; the positive root theta of g(theta) = 1 (past the
minimizer) is the exponential tail rate, and the tail approximation is
P(W > x) ~ H e^{-theta x} with the constant H estimated by Monte Carlo
against a converged population-dynamics pool of the homogeneous
(typical-size) fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .dists import (
    MixedPoissonPareto, JobSizeDistribution, ServiceMarginal, ServiceModel,
    sample_job_sizes, sample_service, service_mean, service_mgf,
    service_mgf_domain, service_weighted_mgf,
)
from .errors import NoCramerRootError, NumericError
from .limit import BranchSizing, LimitParams, PopDynPool, branching_mgf, _draw_tau
from .rng import RandomStream

__all__ = [
    "StabilityReport", "ThetaSolution", "HEstimate",
    "lambda_star", "stability_margin", "boundary_lambda",
    "solve_theta", "estimate_H", "tail_numerator", "cl_tail", "recommended_generations",
]

_BETA_FLOOR = 1e-9
_BETA_CEIL = 1e9
# golden-section saturates at ~1 for single-piece laws at/above the critical
# intensity; treating margin >= 1 - 1e-10 as "not stable" keeps the boundary
# search monotone there
_MARGIN_TARGET = 1.0 - 1e-10


@dataclass(frozen=True)
class StabilityReport:
    beta_star: float
    margin: float
    stable: bool


@dataclass(frozen=True)
class ThetaSolution:
    theta: float
    derivative_value: float
    valid: bool
    moment_warning: bool


@dataclass(frozen=True)
class HEstimate:
    h: float
    ci: tuple[float, float]
    samples_used: int
    prefactor: float
    numerator: float
    numerator_se: float
    denominator: float


def lambda_star(lam: float, mean_jobsize: float) -> float:
    """Rate of the queue-predecessor gaps: lambda * E[N]."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if mean_jobsize < 1:
        raise ValueError("mean job size must be >= 1")
    return lam * mean_jobsize


def _golden_section(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Minimize a unimodal f on [lo, hi] to |interval| < tol."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def stability_margin(params: LimitParams,
                     sizing: BranchSizing = "typical") -> StabilityReport:
    """Minimize g over beta > 0 (bracket by doubling, then golden section).

    ``stable`` is margin < 1.  The minimizer search refines beta to 1e-9.
    """
    sup = service_mgf_domain(params.marginal)
    cap = _BETA_CEIL if math.isinf(sup) else sup * (1.0 - 1e-12)

    def g(beta: float) -> float:
        return branching_mgf(params, beta, sizing)

    # expanding probe to bracket the minimum of a log-convex function
    xs = [_BETA_FLOOR]
    fs = [g(_BETA_FLOOR)]
    x = min(1e-3, cap / 4.0)
    while True:
        xs.append(x)
        fs.append(g(x))
        if len(fs) >= 3 and fs[-1] > fs[-2]:
            break
        if x >= cap * (1.0 - 1e-9) or x >= _BETA_CEIL:
            break
        x = min(x * 2.0, cap)
    i = int(np.argmin(fs))
    lo = xs[i - 1] if i > 0 else _BETA_FLOOR
    hi = xs[i + 1] if i + 1 < len(xs) else xs[-1]
    if hi <= lo:
        hi = min(cap, lo * 2.0)
    beta_star, margin = _golden_section(g, lo, hi, 1e-9)
    return StabilityReport(beta_star=beta_star, margin=margin,
                           stable=bool(margin < 1.0))


def boundary_lambda(job_size: JobSizeDistribution,
                    marginal: ServiceMarginal,
                    tol: float = 1e-6) -> float:
    """The intensity at which min_beta g first reaches 1 (bisection on lambda).

    g is strictly increasing in lambda, so the critical intensity is unique;
    it never exceeds the load boundary 1/(E[N] E[chi]).
    """
    from .dists import job_size_mean
    mean_n = job_size_mean(job_size)
    mean_chi = service_mean(marginal)
    if mean_chi <= 0.0:
        raise NumericError("no stability boundary: zero-work services never saturate")

    def margin_at(lam: float) -> float:
        return stability_margin(LimitParams(job_size, ServiceModel(marginal), lam)).margin

    hi = 1.0 / (mean_n * mean_chi)
    lo = hi * 1e-6
    for _ in range(40):
        if margin_at(lo) < _MARGIN_TARGET:
            break
        lo *= 1e-2
    else:
        raise NumericError("no stability boundary found in probe range")
    for _ in range(60):
        if margin_at(hi) >= _MARGIN_TARGET:
            break
        hi *= 1.25
    else:
        raise NumericError("no stability boundary found in probe range")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if margin_at(mid) < _MARGIN_TARGET:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_theta(params: LimitParams) -> ThetaSolution:
    """Locate the tail-rate root g(theta) = 1 beyond the margin minimizer.

    Requires stable parameters.  Bisection refines theta to 1e-12 relative;
    the derivative value is

        E[N] lambda*/(lambda*+theta)^2 *
            ((lambda*+theta) E[chi e^{theta chi}] - E[e^{theta chi}])

    and must be positive and finite for the tail approximation to hold.  A
    moment warning flags heavy-tailed size laws whose theta-th moment may be
    close to divergence.
    """
    report = stability_margin(params)
    if not report.stable:
        raise NoCramerRootError(
            f"no Cramer root: unstable parameters (margin = {report.margin:.6f})")
    sup = service_mgf_domain(params.marginal)

    def g(beta: float) -> float:
        return branching_mgf(params, beta, "typical")

    lo = report.beta_star
    if math.isinf(sup):
        hi = max(2.0 * lo, 1.0)
        for _ in range(200):
            if g(hi) > 1.0:
                break
            hi *= 2.0
            if hi > _BETA_CEIL:
                raise NumericError("root beyond MGF domain: g never returns to 1")
        else:
            raise NumericError("root beyond MGF domain: g never returns to 1")
    else:
        # approach the domain edge geometrically until g exceeds 1
        gap = (sup - lo) * 0.5
        hi = sup - gap
        for _ in range(200):
            if g(hi) > 1.0:
                break
            gap *= 0.5
            hi = sup - gap
        else:
            raise NumericError("root beyond MGF domain: g never returns to 1")
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)

    ls = params.lambda_star
    mean_n = params.mean_size
    mgf = service_mgf(params.marginal, theta)
    wmgf = service_weighted_mgf(params.marginal, theta)
    deriv = mean_n * ls / (ls + theta) ** 2 * ((ls + theta) * wmgf - mgf)
    valid = bool(deriv > 0.0 and math.isfinite(deriv))
    warn = bool(isinstance(params.job_size, MixedPoissonPareto)
                and theta >= params.job_size.alpha - 1.0)
    return ThetaSolution(theta=theta, derivative_value=deriv, valid=valid,
                         moment_warning=warn)


def tail_numerator(params: LimitParams, theta: float, pool: PopDynPool,
                   samples: int, rng: RandomStream,
                   conditioned: bool = False,
                   chunk: int = 2_000_000) -> tuple[float, float]:
    """Monte-Carlo mean and s.e. of 1 v max_i V_i - sum_i V_i.

    V_i = e^{theta (chi_i - tau_i + W_i)} with fresh (N, chi, tau) and W_i
    from the pool; evaluated as (1 - max V)^+ - (sum V - max V), which is
    algebraically identical but free of large-term cancellation.  With
    ``conditioned=True`` the first term is replaced by its exact integral
    over the exponential gaps, theta/(theta + N lambda*) e^{-lambda* sum_i Y_i}
    with Y_i = chi_i + W_i.
    """
    if pool.size == 0:
        raise ValueError("empty pool")
    th = float(theta)
    ls = params.lambda_star
    gen = rng.generator
    total_sum = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        c = min(chunk, samples - done)
        sizes = sample_job_sizes(params.job_size, None, gen, c)
        offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        tot = int(sizes.sum())
        chi = sample_service(params.marginal, gen, tot)
        tau = _draw_tau(params, gen, tot)
        w = pool.values[gen.integers(0, pool.size, tot)]
        expo = th * (chi - tau + w)
        if float(expo.max(initial=-math.inf)) > 700.0:
            raise NumericError(
                f"numerator overflow: exponent {float(expo.max()):.1f} > 700; "
                "theta too close to instability for this pool")
        v = np.exp(expo)
        vmax = np.maximum.reduceat(v, offsets)
        rest = np.add.reduceat(v, offsets) - vmax
        if conditioned:
            ysum = np.add.reduceat(chi + w, offsets)
            pos_part = th / (th + sizes * ls) * np.exp(-ls * ysum)
        else:
            pos_part = np.where(vmax < 1.0, 1.0 - vmax, 0.0)
        d = pos_part - rest
        if not np.all(np.isfinite(d)):
            raise NumericError("numerator produced non-finite summands")
        total_sum += float(d.sum())
        total_sq += float(np.dot(d, d))
        done += c
    mean = total_sum / samples
    var = max(total_sq / samples - mean ** 2, 0.0)
    return mean, math.sqrt(var / samples)


def estimate_H(params: LimitParams, theta: ThetaSolution, pool: PopDynPool,
               samples: int, rng: RandomStream,
               conditioned: bool = False,
               chunk: int = 2_000_000) -> HEstimate:
    """Monte-Carlo estimate of the tail prefactor H.

    H = (lambda*+theta)^2 / (theta lambda* E[N]) *
        E[1 v max_i e^{theta(chi_i - tau_i + W_i)} - sum_i e^{theta(...)}]
        / ((lambda*+theta) E[chi e^{theta chi}] - E[e^{theta chi}])

    with W_i resampled from the pool.  The expectand is evaluated in the
    cancellation-free form (1 - max V)^+ - (sum V - max V).  With
    ``conditioned=True`` the positive-part term is replaced by its exact
    integral over the exponential gaps given (N, chi, W),

        theta / (theta + N lambda*) * exp(-lambda* * sum_i (chi_i + W_i)),

    removing that term's sampling noise (the remaining term is unchanged).
    """
    if not theta.valid:
        raise NumericError("invalid tail root: derivative condition fails")
    th = theta.theta
    ls = params.lambda_star
    mean_n = params.mean_size
    mgf = service_mgf(params.marginal, th)
    wmgf = service_weighted_mgf(params.marginal, th)
    denominator = (ls + th) * wmgf - mgf
    if denominator <= 0.0:
        raise NumericError("invalid tail root: nonpositive denominator")
    prefactor = (ls + th) ** 2 / (th * ls * mean_n)
    numerator, numerator_se = tail_numerator(params, th, pool, samples, rng,
                                             conditioned=conditioned, chunk=chunk)
    h = prefactor * numerator / denominator
    half = 1.96 * prefactor * numerator_se / denominator
    return HEstimate(h=h, ci=(h - half, h + half), samples_used=samples,
                     prefactor=prefactor, numerator=numerator,
                     numerator_se=numerator_se, denominator=denominator)


def cl_tail(h: float, theta: float, x: float) -> float:
    """Tail approximation P(W > x) ~= min(1, h e^{-theta x})."""
    if not (h > 0 and theta > 0):
        raise ValueError("h and theta must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    return min(1.0, h * math.exp(-theta * x))


def recommended_generations(params: LimitParams, eps: float = 1e-4,
                            sizing: BranchSizing = "typical") -> int:
    """Generations needed for geometric truncation error below eps."""
    report = stability_margin(params, sizing)
    if not report.stable:
        raise NoCramerRootError(
            f"no convergent truncation: margin = {report.margin:.6f} >= 1")
    return max(1, math.ceil(math.log(eps) / math.log(report.margin)))

"""Monte-Carlo samplers for the many-server limiting waiting and sojourn times.

The limiting waiting time is the smallest solution of the branching fixed
point

    W  =d  max(0, max_{i <= N} (chi_i - tau_i + W_i)),

realized pathwise as the running maximum of path sums over a branching tree:
node increments are X = chi - tau with chi ~ B and tau ~ Exponential(lambda*),
lambda* = lambda * E[N].

Branch sizing.  ``branch_sizing="typical"`` (default) draws every node's
piece count from f, the homogeneous tree all tail-asymptotics constants and
the geometric/moment identities are defined on.  ``"size_biased"`` draws
non-root counts from k f(k) / E[N] instead: the job found in front of a
queue position is met in proportion to how many servers it occupies, so the
size-biased tree is what the finite-n simulator actually converges to (the
two trees coincide for deterministic N).  Note the size-biased recursion can
be divergent for parameters where the typical one is still contractive,
since its mean offspring count is E[N^2]/E[N] >= E[N].

Two samplers are provided: an exact recursive tree expansion (cost grows
like E[N]^depth, gated by a node budget) and population dynamics
(O(m * generations * E[N]), resampling bias O(1/m)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dists import (
    JobSizeDistribution, ServiceModel, ServiceMarginal,
    job_size_mean, sample_fragments, sample_job_sizes, sample_service,
    sample_size_biased_job_sizes, service_mgf, size_biased_mean,
)
from .errors import TreeBudgetError, VacuousBoundError
from .rng import RandomStream

__all__ = [
    "LimitParams", "PopDynPool", "BranchSizing",
    "branching_mgf", "expected_tree_nodes",
    "sample_w_tree", "w_tree_samples",
    "popdyn_pool", "waiting_limit_samples",
    "sample_sojourn_limit", "sojourn_limit_samples",
    "check_geometric_bound", "GeometricBoundReport",
    "branching_sum_moments", "BranchingMomentRow",
]

BranchSizing = Literal["size_biased", "typical"]


@dataclass(frozen=True)
class LimitParams:
    """Generic branching data of the limit: job-size law f (untruncated),
    fragment-service model, and the per-server intensity lambda."""
    job_size: JobSizeDistribution
    service: ServiceModel
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not isinstance(self.service, ServiceModel):
            object.__setattr__(self, "service", ServiceModel(self.service))

    @property
    def mean_size(self) -> float:
        return job_size_mean(self.job_size)

    @property
    def lambda_star(self) -> float:
        return self.lam * self.mean_size

    @property
    def marginal(self) -> ServiceMarginal:
        return self.service.marginal

    def mean_offspring(self, sizing: BranchSizing) -> float:
        if sizing == "size_biased":
            return size_biased_mean(self.job_size)
        return self.mean_size


@dataclass(frozen=True)
class PopDynPool:
    """Pool of samples of the depth-``generations`` truncated fixed point."""
    values: np.ndarray
    generations: int
    branch_sizing: BranchSizing = "typical"

    @property
    def size(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(self.values.mean())


def branching_mgf(params: LimitParams, beta: float,
                  sizing: BranchSizing = "typical") -> float:
    """E[sum_{i<=N} e^{beta (chi_i - tau_i)}] = E[N] E[e^{beta chi}] lambda*/(lambda*+beta)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    ls = params.lambda_star
    return params.mean_offspring(sizing) * service_mgf(params.marginal, beta) * ls / (ls + beta)


def expected_tree_nodes(params: LimitParams, depth: int,
                        branch_sizing: BranchSizing = "typical") -> float:
    """Expected node count of a depth-truncated tree (root included)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    root = params.mean_size
    branch = params.mean_offspring(branch_sizing)
    total, layer = 1.0, 1.0
    for r in range(1, depth + 1):
        layer *= root if r == 1 else branch
        total += layer
        if total > 1e18:
            break
    return total


def _draw_sizes(params: LimitParams, gen: np.random.Generator, count: int,
                sizing: BranchSizing) -> np.ndarray:
    if sizing == "size_biased":
        return sample_size_biased_job_sizes(params.job_size, gen, count)
    return sample_job_sizes(params.job_size, None, gen, count)


def _draw_tau(params: LimitParams, gen: np.random.Generator, count: int) -> np.ndarray:
    # inversion keeps tau reproducible from the shared uniform stream
    return -np.log1p(-gen.random(count)) / params.lambda_star


# ---------------------------------------------------------------------------
# exact tree sampler

def sample_w_tree(params: LimitParams, depth: int, rng: RandomStream,
                  branch_sizing: BranchSizing = "typical",
                  max_expected_nodes: float = 5e6) -> float:
    """One exact sample of the depth-truncated limiting waiting time.

    Every node's randomness is keyed to its label, so the infinite tree is a
    fixed function of the stream identity: sampling at depth d and d+1
    expands the same frozen tree, making the output pathwise nondecreasing
    in depth.  Distinct samples need distinct streams.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    expected = expected_tree_nodes(params, depth, branch_sizing)
    if expected > max_expected_nodes:
        raise TreeBudgetError(
            f"tree budget exceeded: expected {expected:.3g} nodes > {max_expected_nodes:.3g}")
    best = 0.0
    stack: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    marginal = params.marginal
    while stack:
        path, s_parent = stack.pop()
        g = rng.keyed_generator(path)
        if path:
            chi = float(sample_service(marginal, g, 1)[0])
            tau = float(_draw_tau(params, g, 1)[0])
            s = s_parent + chi - tau
            if s > best:
                best = s
        else:
            s = 0.0
        if len(path) == depth:
            continue
        sizing: BranchSizing = branch_sizing if path else "typical"
        n_children = int(_draw_sizes(params, g, 1, sizing)[0])
        for i in range(1, n_children + 1):
            stack.append((path + (i,), s))
    return best


# ---------------------------------------------------------------------------
# vectorized generation-by-generation expansion

def _expand_generation(params: LimitParams, gen: np.random.Generator,
                       tree: np.ndarray, S: np.ndarray,
                       sizing: BranchSizing) -> tuple[np.ndarray, np.ndarray]:
    sizes = _draw_sizes(params, gen, S.size, sizing)
    tree = np.repeat(tree, sizes)
    chi = sample_service(params.marginal, gen, tree.size)
    tau = _draw_tau(params, gen, tree.size)
    S = np.repeat(S, sizes) + chi - tau
    return tree, S


def _per_tree_max(tree: np.ndarray, S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # nodes arrive grouped by tree id; reduce over group boundaries
    firsts = np.concatenate(([0], 1 + np.flatnonzero(tree[1:] != tree[:-1])))
    return tree[firsts], np.maximum.reduceat(S, firsts)


def w_tree_samples(params: LimitParams, depth: int, count: int, rng: RandomStream,
                   branch_sizing: BranchSizing = "typical",
                   max_expected_nodes: float = 2e8,
                   node_chunk: int = 4_000_000) -> np.ndarray:
    """``count`` independent samples of the depth-truncated waiting time.

    Same law as ``sample_w_tree`` but grown generation-by-generation across
    many trees at once; intended for large Monte-Carlo runs.
    """
    per_tree = expected_tree_nodes(params, depth, branch_sizing)
    if per_tree * count > max_expected_nodes:
        raise TreeBudgetError(
            f"tree budget exceeded: expected {per_tree * count:.3g} nodes "
            f"> {max_expected_nodes:.3g}")
    gen = rng.generator
    chunk_trees = max(1, int(node_chunk / max(per_tree, 1.0)))
    out = np.empty(count)
    done = 0
    while done < count:
        c = min(chunk_trees, count - done)
        best = np.zeros(c)
        tree = np.arange(c)
        S = np.zeros(c)
        for r in range(depth):
            sizing: BranchSizing = "typical" if r == 0 else branch_sizing
            tree, S = _expand_generation(params, gen, tree, S, sizing)
            if S.size > 8 * node_chunk:
                raise TreeBudgetError(
                    f"tree budget exceeded: generation {r + 1} holds {S.size} nodes")
            ids, gmax = _per_tree_max(tree, S)
            best[ids] = np.maximum(best[ids], gmax)
        out[done:done + c] = best
        done += c
    return out


# ---------------------------------------------------------------------------
# population dynamics

def popdyn_pool(params: LimitParams, m: int, generations: int, rng: RandomStream,
                branch_sizing: BranchSizing = "typical") -> PopDynPool:
    """Iterate the fixed point on a pool of m samples for k generations.

    Each new entry is max(0, max_{i<=K}(chi_i - tau_i + W_i)) with fresh
    (K, chi, tau) and W_i resampled uniformly with replacement from the
    previous pool; generation 0 is all zeros.
    """
    if m < 1:
        raise ValueError("pool size must be >= 1")
    if generations < 0:
        raise ValueError("generations must be >= 0")
    gen = rng.generator
    pool = np.zeros(m)
    for _ in range(generations):
        sizes = _draw_sizes(params, gen, m, branch_sizing)
        offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        total = int(sizes.sum())
        chi = sample_service(params.marginal, gen, total)
        tau = _draw_tau(params, gen, total)
        w = pool[gen.integers(0, m, total)]
        vals = chi - tau + w
        pool = np.maximum(0.0, np.maximum.reduceat(vals, offsets))
    return PopDynPool(values=pool, generations=generations, branch_sizing=branch_sizing)


def waiting_limit_samples(params: LimitParams, pool: PopDynPool, count: int,
                          rng: RandomStream) -> np.ndarray:
    """Samples of the tagged job's limiting waiting time.

    Applies one root layer with a typical size N ~ f on top of the pool's
    fixed point, which matters when the pool was built size-biased.
    """
    if pool.size == 0:
        raise ValueError("empty pool")
    gen = rng.generator
    sizes = sample_job_sizes(params.job_size, None, gen, count)
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    total = int(sizes.sum())
    chi = sample_service(params.marginal, gen, total)
    tau = _draw_tau(params, gen, total)
    w = pool.values[gen.integers(0, pool.size, total)]
    vals = chi - tau + w
    return np.maximum(0.0, np.maximum.reduceat(vals, offsets))


def sample_sojourn_limit(params: LimitParams, pool: PopDynPool,
                         rng: RandomStream) -> float:
    """One sample of the limiting sojourn time.

    T = max(0, max_{i<=N}(chi_i - tau_i + W_i)) + max_{j<=N} chi^(j) with a
    single size draw N ~ f; the own-service vector is a fresh joint draw,
    independent of the waiting part.
    """
    if pool.size == 0:
        raise ValueError("empty pool")
    gen = rng.generator
    n = int(sample_job_sizes(params.job_size, None, gen, 1)[0])
    chi = sample_service(params.marginal, gen, n)
    tau = _draw_tau(params, gen, n)
    w = pool.values[gen.integers(0, pool.size, n)]
    wait = max(0.0, float(np.max(chi - tau + w)))
    own = sample_fragments(params.service, n, gen)
    return wait + float(own.max())


def sojourn_limit_samples(params: LimitParams, pool: PopDynPool, count: int,
                          rng: RandomStream) -> np.ndarray:
    """Vectorized sojourn sampler (falls back to scalar for custom joints)."""
    if params.service.joint is not None:
        return np.array([sample_sojourn_limit(params, pool, rng) for _ in range(count)])
    if pool.size == 0:
        raise ValueError("empty pool")
    gen = rng.generator
    sizes = sample_job_sizes(params.job_size, None, gen, count)
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    total = int(sizes.sum())
    chi = sample_service(params.marginal, gen, total)
    tau = _draw_tau(params, gen, total)
    w = pool.values[gen.integers(0, pool.size, total)]
    wait = np.maximum(0.0, np.maximum.reduceat(chi - tau + w, offsets))
    own = sample_service(params.marginal, gen, total)
    return wait + np.maximum.reduceat(own, offsets)


# ---------------------------------------------------------------------------
# proof-derived identity checks (homogeneous typical-size tree)

@dataclass(frozen=True)
class GeometricBoundReport:
    beta: float
    rho_beta: float
    trials: int
    r: np.ndarray
    p_hat: np.ndarray
    std_err: np.ndarray
    bound: np.ndarray
    violated: np.ndarray

    @property
    def any_violation(self) -> bool:
        return bool(self.violated.any())


def check_geometric_bound(params: LimitParams, beta: float, r_max: int,
                          trials: int, rng: RandomStream,
                          node_chunk: int = 4_000_000) -> GeometricBoundReport:
    """Monte-Carlo check of P(max path sum at generation r > 0) <= rho_beta^r.

    The bound concerns the tree with typical sizes N ~ f at every node; a row
    is flagged when the estimate exceeds the bound by more than four binomial
    standard errors.
    """
    rho = branching_mgf(params, beta, "typical")
    if rho >= 1.0:
        raise VacuousBoundError(f"bound vacuous: rho_beta = {rho:.6f} >= 1")
    gen = rng.generator
    per_tree = expected_tree_nodes(params, r_max, "typical")
    chunk_trees = max(1, int(node_chunk / max(per_tree, 1.0)))
    hits = np.zeros(r_max + 1, dtype=np.int64)
    done = 0
    while done < trials:
        c = min(chunk_trees, trials - done)
        tree = np.arange(c)
        S = np.zeros(c)
        for r in range(1, r_max + 1):
            tree, S = _expand_generation(params, gen, tree, S, "typical")
            pos = np.bincount(tree[S > 0.0], minlength=c) > 0
            hits[r] += int(pos.sum())
        done += c
    r = np.arange(r_max + 1)
    p_hat = hits / float(trials)
    std_err = np.sqrt(p_hat * (1.0 - p_hat) / trials)
    bound = rho ** r.astype(float)
    violated = p_hat > bound + 4.0 * std_err
    return GeometricBoundReport(beta=beta, rho_beta=rho, trials=trials, r=r,
                                p_hat=p_hat, std_err=std_err, bound=bound,
                                violated=violated)


@dataclass(frozen=True)
class BranchingMomentRow:
    r: int
    estimate: float
    std_err: float
    exact: float


def branching_sum_moments(params: LimitParams, beta: float, r_max: int,
                          trials: int, rng: RandomStream) -> list[BranchingMomentRow]:
    """Estimate E[sum over generation-r nodes of e^{beta * path sum}].

    On the typical-size tree this equals rho_beta^r exactly; returned rows
    carry the Monte-Carlo estimate, its standard error, and the exact value.
    """
    rho = branching_mgf(params, beta, "typical")
    gen = rng.generator
    sums = np.zeros((r_max, trials))
    tree = np.arange(trials)
    S = np.zeros(trials)
    for r in range(1, r_max + 1):
        tree, S = _expand_generation(params, gen, tree, S, "typical")
        sums[r - 1] = np.bincount(tree, weights=np.exp(beta * S), minlength=trials)
    rows = []
    for r in range(1, r_max + 1):
        est = float(sums[r - 1].mean())
        se = float(sums[r - 1].std(ddof=1) / math.sqrt(trials))
        rows.append(BranchingMomentRow(r=r, estimate=est, std_err=se, exact=rho ** r))
    return rows

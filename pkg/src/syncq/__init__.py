"""syncq: FCFS parallel-server queues with synchronized service starts.

Simulators for the synchronized-start, split-merge and M/G/n disciplines on
a shared job stream; branching-tree and population-dynamics samplers for the
many-server limiting waiting and sojourn times; and the exponential tail
approximation P(W > x) ~ H e^(-theta x) with its stability diagnostics.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .rng import RandomStream
from .dists import (
    DeterministicSize, MixedPoissonPareto, EmpiricalSize,
    MinWithCap, ConditionalOnCap,
    UniformService, ExponentialService, DeterministicService, ServiceModel,
    sample_job_size, sample_job_sizes, job_size_moment, job_size_mean,
    service_mgf, service_weighted_mgf, service_mean, sample_fragments,
)
from .engine import (
    SimConfig, JobStream, SimOutput,
    assign_servers, generate_job_stream, run_syncb, run_splitmerge, run_mgn,
)
from .limit import (
    LimitParams, PopDynPool, popdyn_pool, sample_w_tree, w_tree_samples,
    waiting_limit_samples, sample_sojourn_limit, sojourn_limit_samples,
    check_geometric_bound, branching_sum_moments, branching_mgf,
)
from .asymptotics import (
    StabilityReport, ThetaSolution, HEstimate,
    lambda_star, stability_margin, boundary_lambda, solve_theta,
    estimate_H, cl_tail, recommended_generations,
)
from .stats import MeanCI, mean_ci, empirical_ccdf, running_mean, default_ccdf_grid

__all__ = [
    "__version__", "RandomStream",
    "DeterministicSize", "MixedPoissonPareto", "EmpiricalSize",
    "MinWithCap", "ConditionalOnCap",
    "UniformService", "ExponentialService", "DeterministicService", "ServiceModel",
    "sample_job_size", "sample_job_sizes", "job_size_moment", "job_size_mean",
    "service_mgf", "service_weighted_mgf", "service_mean", "sample_fragments",
    "SimConfig", "JobStream", "SimOutput",
    "assign_servers", "generate_job_stream", "run_syncb", "run_splitmerge", "run_mgn",
    "LimitParams", "PopDynPool", "popdyn_pool", "sample_w_tree", "w_tree_samples",
    "waiting_limit_samples", "sample_sojourn_limit", "sojourn_limit_samples",
    "check_geometric_bound", "branching_sum_moments", "branching_mgf",
    "StabilityReport", "ThetaSolution", "HEstimate",
    "lambda_star", "stability_margin", "boundary_lambda", "solve_theta",
    "estimate_H", "cl_tail", "recommended_generations",
    "MeanCI", "mean_ci", "empirical_ccdf", "running_mean", "default_ccdf_grid",
]

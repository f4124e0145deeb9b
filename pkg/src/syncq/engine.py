"""Finite-system simulation of three service disciplines on one job stream.

All three runners consume the same materialized stream (arrival times, piece
counts, server assignments, fragment requirements), which is what makes
common-random-number comparisons meaningful.

Disciplines:

* ``run_syncb`` -- all pieces of a job begin service at the same instant; a
  piece must be at the head of its FCFS queue with its server free, and each
  server is released when its own piece finishes.
* ``run_splitmerge`` -- pieces begin independently as soon as they reach the
  head of their queue and the server is free, but a finished piece keeps
  holding its server until the whole job is done; all held servers release
  together at the job's departure.
* ``run_mgn`` -- classical M/G/n: one central FCFS queue, a job's requirement
  is the sum of its pieces, the stream's server assignments are ignored.

Each runner is an exact arrival-order recursion rather than an event-calendar
loop: because every per-server queue is ordered by arrival, a job's service
start depends only on earlier-arrived jobs, so one forward pass computes the
identical trajectory an event-driven simulator would produce, in O(total
fragments).  Deadlock-freedom is structural: the recursion always yields a
finite start time for every job.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dists import (
    JobSizeDistribution, ServiceModel, Truncation,
    sample_fragments, sample_job_sizes, sample_service, size_cap,
)
from .errors import ConfigError
from .rng import RandomStream

__all__ = [
    "SimConfig", "JobStream", "SimOutput",
    "assign_servers", "generate_job_stream",
    "run_syncb", "run_splitmerge", "run_mgn", "run_discipline", "DISCIPLINES",
]


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one finite-system run.

    ``lam`` is the per-server arrival intensity; jobs arrive at total rate
    ``lam * n``.  The effective job-size cap must not exceed n so that every
    piece can be routed to a distinct server.
    """
    n: int
    lam: float
    job_size: JobSizeDistribution
    truncation: Truncation
    service: ServiceModel
    horizon_jobs: int
    warmup_jobs: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n: server count must be >= 1")
        if not self.lam > 0:
            raise ConfigError("lambda: arrival intensity must be positive")
        if self.warmup_jobs < 0:
            raise ConfigError("warmup_jobs: must be >= 0")
        if self.horizon_jobs <= self.warmup_jobs:
            raise ConfigError("horizon_jobs: must exceed warmup_jobs")
        cap = size_cap(self.job_size, self.truncation)
        if cap is None:
            raise ConfigError(
                "job_size: unbounded law needs a truncation with cap <= n")
        if cap > self.n:
            raise ConfigError(
                f"job_size: effective cap {cap} exceeds server count {self.n}")


@dataclass(frozen=True)
class JobStream:
    """Materialized arrival process shared across disciplines.

    Fragment data is stored flat: job j owns slots offsets[j]:offsets[j+1] of
    ``servers`` (ids in 1..n) and ``services``.
    """
    n: int
    arrival: np.ndarray
    size: np.ndarray
    servers: np.ndarray
    services: np.ndarray
    offsets: np.ndarray

    @property
    def njobs(self) -> int:
        return self.arrival.size

    def job_servers(self, j: int) -> np.ndarray:
        return self.servers[self.offsets[j]:self.offsets[j + 1]]

    def job_services(self, j: int) -> np.ndarray:
        return self.services[self.offsets[j]:self.offsets[j + 1]]

    def validate(self) -> None:
        if np.any(np.diff(self.arrival) <= 0):
            raise ValueError("arrival times must be strictly increasing")
        if np.any(self.size < 1) or np.any(self.size > self.n):
            raise ValueError("job sizes must lie in 1..n")
        for j in range(self.njobs):
            s = self.job_servers(j)
            if np.unique(s).size != s.size:
                raise ValueError(f"job {j}: server assignment not distinct")


@dataclass(frozen=True)
class SimOutput:
    """Per-job records of one discipline run plus aggregate counters.

    ``start`` is the synchronized service start under SyncB and the first
    fragment start under Split-Merge.  ``events`` counts state transitions
    (arrivals, starts, completions, departures); ``clock`` is the last
    simulated instant.  Jobs before ``warmup_jobs`` are flagged for exclusion
    from statistics but their records are kept.
    """
    discipline: str
    arrival: np.ndarray
    start: np.ndarray
    departure: np.ndarray
    events: int
    clock: float
    warmup_jobs: int = 0

    @property
    def njobs(self) -> int:
        return self.arrival.size

    @property
    def waiting(self) -> np.ndarray:
        return self.start - self.arrival

    @property
    def sojourn(self) -> np.ndarray:
        return self.departure - self.arrival

    def kept(self, values: np.ndarray) -> np.ndarray:
        return values[self.warmup_jobs:]


def assign_servers(n: int, k: int, rng: RandomStream | np.random.Generator) -> np.ndarray:
    """Uniformly random k-subset of server ids {1, ..., n}."""
    if not 1 <= k <= n:
        raise ConfigError(f"cannot route {k} pieces to {n} servers")
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    return gen.choice(n, size=k, replace=False).astype(np.int64) + 1


def generate_job_stream(config: SimConfig, rng: Optional[RandomStream] = None) -> JobStream:
    """Materialize arrivals, sizes, assignments and requirements.

    Inter-arrivals are iid Exponential(lam * n); sizes follow the truncated
    job-size law; assignments are uniform k-subsets; requirements come from
    the service model's joint sampler (independent marginals by default).
    """
    rng = rng if rng is not None else RandomStream(config.seed)
    gen = rng.generator
    m = config.horizon_jobs
    arrival = np.cumsum(gen.exponential(1.0 / (config.lam * config.n), m))
    sizes = sample_job_sizes(config.job_size, config.truncation, gen, m)
    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    total = int(offsets[-1])

    servers = np.empty(total, dtype=np.int64)
    ones = sizes == 1
    n_ones = int(ones.sum())
    if n_ones:
        servers[offsets[:-1][ones]] = gen.integers(1, config.n + 1, size=n_ones)
    for j in np.flatnonzero(~ones):
        servers[offsets[j]:offsets[j + 1]] = assign_servers(config.n, int(sizes[j]), gen)

    if config.service.joint is None:
        services = sample_service(config.service.marginal, gen, total)
    else:
        services = np.empty(total, dtype=float)
        for j in range(m):
            services[offsets[j]:offsets[j + 1]] = sample_fragments(
                config.service, int(sizes[j]), gen)

    return JobStream(n=config.n, arrival=arrival, size=sizes,
                     servers=servers, services=services, offsets=offsets)


def _check_stream(stream: JobStream, n: int) -> None:
    if n != stream.n:
        raise ConfigError(f"stream was generated for n = {stream.n}, not {n}")


def run_syncb(stream: JobStream, n: int) -> SimOutput:
    """Synchronized-start discipline.

    Per server, track the release time of the last fragment placed in its
    queue; a job starts at the max of its arrival and those releases over its
    servers, occupies each server for that fragment's own requirement, and
    departs when its slowest fragment finishes.
    """
    _check_stream(stream, n)
    njobs = stream.njobs
    arr = stream.arrival.tolist()
    off = stream.offsets.tolist()
    srv = stream.servers.tolist()
    svc = stream.services.tolist()
    release = [0.0] * (n + 1)
    start = np.empty(njobs)
    depart = np.empty(njobs)
    for j in range(njobs):
        lo, hi = off[j], off[j + 1]
        s = arr[j]
        for i in range(lo, hi):
            r = release[srv[i]]
            if r > s:
                s = r
        dmax = 0.0
        for i in range(lo, hi):
            x = svc[i]
            release[srv[i]] = s + x
            if x > dmax:
                dmax = x
        start[j] = s
        depart[j] = s + dmax
    nfrag = int(stream.offsets[-1])
    clock = float(max(arr[-1], depart.max())) if njobs else 0.0
    return SimOutput("syncb", stream.arrival, start, depart,
                     events=2 * njobs + nfrag, clock=clock)


def run_splitmerge(stream: JobStream, n: int) -> SimOutput:
    """Split-Merge discipline: independent starts, blocking until departure.

    Per server, track the departure time of the job holding it last; a
    fragment starts at max(arrival, hold), and every server the job touched
    is held until the job-wide max completion.
    """
    _check_stream(stream, n)
    njobs = stream.njobs
    arr = stream.arrival.tolist()
    off = stream.offsets.tolist()
    srv = stream.servers.tolist()
    svc = stream.services.tolist()
    hold = [0.0] * (n + 1)
    start = np.empty(njobs)
    depart = np.empty(njobs)
    for j in range(njobs):
        lo, hi = off[j], off[j + 1]
        a = arr[j]
        first = float("inf")
        d = 0.0
        for i in range(lo, hi):
            f = hold[srv[i]]
            if f < a:
                f = a
            if f < first:
                first = f
            c = f + svc[i]
            if c > d:
                d = c
        for i in range(lo, hi):
            hold[srv[i]] = d
        start[j] = first
        depart[j] = d
    nfrag = int(stream.offsets[-1])
    clock = float(max(arr[-1], depart.max())) if njobs else 0.0
    return SimOutput("splitmerge", stream.arrival, start, depart,
                     events=2 * njobs + 2 * nfrag, clock=clock)


def run_mgn(stream: JobStream, n: int) -> SimOutput:
    """M/G/n comparator: central FCFS queue, summed requirements."""
    _check_stream(stream, n)
    njobs = stream.njobs
    arr = stream.arrival.tolist()
    off = stream.offsets.tolist()
    svc = stream.services.tolist()
    free = [0.0] * n
    heapq.heapify(free)
    start = np.empty(njobs)
    depart = np.empty(njobs)
    for j in range(njobs):
        total = 0.0
        for i in range(off[j], off[j + 1]):
            total += svc[i]
        t = heapq.heappop(free)
        s = arr[j] if arr[j] > t else t
        heapq.heappush(free, s + total)
        start[j] = s
        depart[j] = s + total
    clock = float(max(arr[-1], depart.max())) if njobs else 0.0
    return SimOutput("mgn", stream.arrival, start, depart,
                     events=3 * njobs, clock=clock)


DISCIPLINES = {
    "syncb": run_syncb,
    "splitmerge": run_splitmerge,
    "mgn": run_mgn,
}


def run_discipline(name: str, stream: JobStream, n: int) -> SimOutput:
    try:
        runner = DISCIPLINES[name]
    except KeyError:
        raise ConfigError(f"unknown discipline {name!r}; expected one of {sorted(DISCIPLINES)}")
    return runner(stream, n)

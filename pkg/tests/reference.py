"""Brute-force event-driven reference simulators.

Deliberately independent of the package's arrival-order recursions: explicit
per-server FIFO queues, an event heap, and a rescan-for-startable-work pass
after every event.  O(jobs^2) — only for cross-checking on small instances.

Tie-breaking: completions are processed before arrivals at equal timestamps,
then insertion order.
"""
from __future__ import annotations

import heapq
from collections import deque

import numpy as np

_COMPLETION, _ARRIVAL, _RELEASE = 0, 1, 2


def ref_syncb(stream, n):
    """Synchronized starts; each server released at its own fragment's end."""
    njobs = stream.njobs
    queues = [deque() for _ in range(n + 1)]
    busy = [False] * (n + 1)
    started = [False] * njobs
    remaining = [0] * njobs
    start = np.full(njobs, np.nan)
    depart = np.full(njobs, np.nan)
    arrived = [False] * njobs

    events = []
    seq = 0
    for j in range(njobs):
        heapq.heappush(events, (stream.arrival[j], _ARRIVAL, seq, j, -1))
        seq += 1

    def try_starts(now):
        nonlocal seq
        progress = True
        while progress:
            progress = False
            for j in range(njobs):
                if started[j] or not arrived[j]:
                    continue
                servers = stream.job_servers(j)
                ok = all(queues[s] and queues[s][0] == j and not busy[s] for s in servers)
                if not ok:
                    continue
                started[j] = True
                start[j] = now
                remaining[j] = len(servers)
                for s, x in zip(servers, stream.job_services(j)):
                    busy[s] = True
                    heapq.heappush(events, (now + x, _COMPLETION, seq, j, int(s)))
                    seq += 1
                progress = True

    while events:
        now, kind, _, j, s = heapq.heappop(events)
        if kind == _ARRIVAL:
            arrived[j] = True
            for srv in stream.job_servers(j):
                queues[srv].append(j)
        else:
            busy[s] = False
            queues[s].popleft()
            remaining[j] -= 1
            if remaining[j] == 0:
                depart[j] = now
        try_starts(now)
    return start, depart


def ref_splitmerge(stream, n):
    """Independent fragment starts; all servers held until the job departs."""
    njobs = stream.njobs
    queues = [deque() for _ in range(n + 1)]   # (job, fragment index)
    holder = [None] * (n + 1)                  # job currently owning the server
    frag_started = {}
    frag_done = [0] * njobs
    first_start = np.full(njobs, np.inf)
    depart = np.full(njobs, np.nan)
    arrived = [False] * njobs

    events = []
    seq = 0
    for j in range(njobs):
        heapq.heappush(events, (stream.arrival[j], _ARRIVAL, seq, j, -1))
        seq += 1

    def try_starts(now):
        nonlocal seq
        progress = True
        while progress:
            progress = False
            for s in range(1, n + 1):
                if holder[s] is not None or not queues[s]:
                    continue
                j, fi = queues[s][0]
                if not arrived[j]:
                    continue
                queues[s].popleft()
                holder[s] = j
                frag_started[(j, fi)] = now
                if now < first_start[j]:
                    first_start[j] = now
                x = stream.job_services(j)[fi]
                heapq.heappush(events, (now + x, _COMPLETION, seq, j, s))
                seq += 1
                progress = True

    while events:
        now, kind, _, j, s = heapq.heappop(events)
        if kind == _ARRIVAL:
            arrived[j] = True
            for fi, srv in enumerate(stream.job_servers(j)):
                queues[srv].append((j, fi))
        elif kind == _COMPLETION:
            frag_done[j] += 1
            if frag_done[j] == len(stream.job_servers(j)):
                depart[j] = now
                # all servers held by j release together
                for srv in stream.job_servers(j):
                    holder[srv] = None
        try_starts(now)
    return first_start, depart


def ref_mgn(stream, n):
    """Central FCFS queue, n servers, summed requirements."""
    njobs = stream.njobs
    waiting = deque()
    idle = n
    start = np.full(njobs, np.nan)
    depart = np.full(njobs, np.nan)

    events = []
    seq = 0
    for j in range(njobs):
        heapq.heappush(events, (stream.arrival[j], _ARRIVAL, seq, j))
        seq += 1

    def serve(now):
        nonlocal idle, seq
        while idle > 0 and waiting:
            j = waiting.popleft()
            idle -= 1
            start[j] = now
            total = float(stream.job_services(j).sum())
            heapq.heappush(events, (now + total, _COMPLETION, seq, j))
            seq += 1

    while events:
        now, kind, _, j = heapq.heappop(events)
        if kind == _ARRIVAL:
            waiting.append(j)
        else:
            depart[j] = now
            idle += 1
        serve(now)
    return start, depart

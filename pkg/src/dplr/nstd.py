"""Per-unit run-length state transition diagram and repair by dynamic programming.

Every source-to-sink path is a sequence of alternating on/off runs whose
lengths respect the unit's minimum up/down times; the run that reaches the
sink may be cut by the horizon.  Repair picks the path closest in Hamming
distance to a trial commitment row.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .model import GeneratingUnit, UcInstance, startup_cost


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    status: int
    start: int  # first period of the run, may be <= 0 for the initial run
    stop: int  # first period after the run, in 1..T+1

    def span(self) -> range:
        """In-horizon periods covered by the edge (1-based)."""
        return range(max(self.start, 1), self.stop)


@dataclass(frozen=True)
class NstdGraph:
    """Nodes are ``(t, status)``: a run of ``status`` starting at period ``t``.

    Node 0 is the source, standing for the run already in progress before
    the horizon; the last node is the sink at ``T + 1``.
    """

    nodes: tuple[tuple[int, int], ...]
    edges: tuple[Edge, ...]
    horizon: int

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return len(self.nodes) - 1

    def out_edges(self) -> list[list[Edge]]:
        out: list[list[Edge]] = [[] for _ in self.nodes]
        for e in self.edges:
            out[e.src].append(e)
        return out

    def paths(self) -> Iterator[tuple[int, ...]]:
        """Yield the commitment string of every source-to-sink path."""
        out = self.out_edges()

        def walk(node, prefix):
            if node == self.sink:
                yield tuple(prefix)
                return
            for e in out[node]:
                yield from walk(e.dst, prefix + [e.status] * len(e.span()))

        yield from walk(self.source, [])


def build_nstd(unit: GeneratingUnit, horizon: int) -> NstdGraph:
    return _build(unit.min_up, unit.min_down, int(unit.init_on), unit.init_duration, horizon)


@lru_cache(maxsize=1024)
def _build(min_up: int, min_down: int, init_status: int, init_duration: int, T: int) -> NstdGraph:
    if T < 1:
        raise ValueError("horizon must be >= 1")
    min_len = {1: min_up, 0: min_down}
    index: dict[tuple[int, int], int] = {}
    nodes: list[tuple[int, int]] = [(1 - init_duration, init_status)]
    raw: list[tuple[int, tuple[int, int] | None, int, int, int]] = []
    frontier = [0]
    seen_runs = set()
    while frontier:
        u = frontier.pop()
        t1, s = nodes[u]
        raw.append((u, None, s, t1, T + 1))  # run to the sink, truncation allowed
        first = max(t1 + min_len[s], 1 if u == 0 else t1 + 1)
        for t2 in range(first, T + 1):
            key = (t2, 1 - s)
            if key not in index:
                index[key] = len(nodes)
                nodes.append(key)
                frontier.append(index[key])
            if (u, t2) not in seen_runs:
                seen_runs.add((u, t2))
                raw.append((u, key, s, t1, t2))
    # order interior nodes by period so that index order is topological
    interior = sorted(range(1, len(nodes)), key=lambda k: nodes[k])
    remap = {0: 0}
    for new, old in enumerate(interior, start=1):
        remap[old] = new
    sink = len(nodes)
    ordered = [nodes[0]] + [nodes[k] for k in interior] + [(T + 1, -1)]
    edges = []
    for u, key, s, t1, t2 in raw:
        dst = sink if key is None else remap[index[key]]
        edges.append(Edge(remap[u], dst, s, t1, t2))
    edges.sort(key=lambda e: (e.src, e.stop, e.dst))
    return NstdGraph(tuple(ordered), tuple(edges), T)


def edge_cost(edge: Edge, trial_row: Sequence[int]) -> int:
    """Hamming distance between the edge's run and the trial row on its span."""
    return sum(1 for t in edge.span() if int(trial_row[t - 1]) != edge.status)


def repair_unit(graph: NstdGraph, trial_row: Sequence[int]) -> tuple[np.ndarray, int]:
    """Closest feasible commitment string to ``trial_row``.

    Ties on distance go to fewer on-periods, then to the lexicographically
    smallest string.
    """
    T = graph.horizon
    trial = np.asarray(trial_row, dtype=int)
    if trial.shape != (T,):
        raise ValueError(f"trial row has length {trial.size}, expected {T}")
    ones = np.concatenate([[0], np.cumsum(trial)])
    # bits[t] = integer value of an all-on suffix starting at period t
    bits = [((1 << (T - t + 1)) - 1) if t <= T else 0 for t in range(T + 2)]
    out = graph.out_edges()
    n = len(graph.nodes)
    best: list[tuple[int, int, int] | None] = [None] * n
    choice: list[Edge | None] = [None] * n
    best[graph.sink] = (0, 0, 0)
    for u in range(n - 2, -1, -1):
        for e in out[u]:
            tail = best[e.dst]
            if tail is None:
                continue
            a, b = max(e.start, 1), e.stop
            length = b - a
            k1 = int(ones[b - 1] - ones[a - 1]) if length > 0 else 0
            if e.status:
                key = (length - k1 + tail[0], length + tail[1], bits[a] - bits[b] + tail[2])
            else:
                key = (k1 + tail[0], tail[1], tail[2])
            if best[u] is None or key < best[u]:
                best[u] = key
                choice[u] = e
    row = np.zeros(T, dtype=int)
    u = graph.source
    while u != graph.sink:
        e = choice[u]
        for t in e.span():
            row[t - 1] = e.status
        u = e.dst
    return row, best[graph.source][0]


def adjust_schedule(instance: UcInstance, trial_z, graphs: Sequence[NstdGraph] | None = None):
    """Repair every unit row independently.

    Returns ``(new_z, total_distance, startup_cost)``.
    """
    trial_z = np.asarray(trial_z, dtype=int)
    if graphs is None:
        graphs = [build_nstd(u, instance.horizon) for u in instance.units]
    new_z = np.zeros_like(trial_z)
    total = 0
    for i, g in enumerate(graphs):
        new_z[i], dist = repair_unit(g, trial_z[i])
        total += dist
    return new_z, total, startup_cost(new_z, instance.units)

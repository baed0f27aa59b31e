"""Continuous-time Monte Carlo of the many-agent model on a graph.

Edges carry independent unit-rate exponential clocks, realized as one global
clock of rate |E| plus a uniform edge choice.  Streams are counter-based
(Philox keyed by seed and replica), so runs are reproducible and replicas
independent.
"""
from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import models
from .errors import CapacityError, ModelError, ParameterError
from .models import ModelSpec, spec_label


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..n-1."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ParameterError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ParameterError(f"edge ({u},{v}) outside vertex range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ParameterError(f"duplicate edge ({u},{v})")
            seen.add(key)

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        """Parse 'u v' pairs, one per line; vertex count is max index + 1."""
        edges = []
        top = -1
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError(f"line {lineno}: expected 'u v', got {raw!r}")
            u, v = (int(p) for p in parts)
            edges.append((u, v))
            top = max(top, u, v)
        return cls(top + 1, tuple(edges))

    def is_connected(self) -> bool:
        if self.n_vertices <= 1:
            return True
        adj = {v: set() for v in range(self.n_vertices)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices


@dataclass
class Trajectory:
    """Event times and the configurations they produce."""

    initial: tuple[int, ...]
    times: list[float]
    configs: list[tuple[int, ...]]
    seed: int
    model: str
    graph: Graph


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct (seed, stream) pairs are independent."""
    key = (int(seed) << 64) | (stream & ((1 << 64) - 1))
    return np.random.Generator(np.random.Philox(key=key))


class _SplitSampler:
    """Cached inverse-cdf sampling of the family's splitting laws."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self._tables: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def draw(self, agent: int, n: int, rng: np.random.Generator) -> int:
        table = self._tables.get((agent, n))
        if table is None:
            pmf = models.split_pmf(self.spec, agent, n)
            support = np.array(pmf.support)
            cum = np.cumsum([float(m) for m in pmf.mass])
            cum[-1] = 1.0
            table = (support, cum)
            self._tables[(agent, n)] = table
        support, cum = table
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        return int(support[min(idx, len(support) - 1)])


def vertex_caps(graph: Graph, spec: ModelSpec) -> list[int | None]:
    caps = models.pair_caps(spec)
    if caps is None:
        return [None] * graph.n_vertices
    out: list[int | None] = [caps[0]] * graph.n_vertices
    if not models.is_exchange_symmetric(spec) and graph.edges:
        u, v = graph.edges[0]
        out[u], out[v] = caps[0], caps[1]
    return out


def _validate(graph: Graph, spec: ModelSpec, init) -> None:
    if not models.is_exchange_symmetric(spec) and len(graph.edges) > 1:
        # endpoint order fixes the agent roles on a lone edge; with shared
        # vertices the roles would be ambiguous
        raise ModelError(
            "agent-asymmetric dynamics is only defined on a single edge; "
            f"{spec_label(spec)} has distinct agent roles"
        )
    if len(init) != graph.n_vertices:
        raise ParameterError("one initial wealth per vertex required")
    if any(x < 0 for x in init):
        raise ParameterError("wealths must be nonnegative")
    for x, cap in zip(init, vertex_caps(graph, spec)):
        if cap is not None and x > cap:
            raise CapacityError(f"initial wealth {x} exceeds per-agent capacity {cap}")


def step(config, edge, spec: ModelSpec, rng: np.random.Generator):
    """One split/exchange/merge update across a single edge.

    The edge's endpoint order fixes the agent roles: the first endpoint
    splits with agent 1's law, the second with agent 2's.
    """
    sampler = _SplitSampler(spec)
    return _step(tuple(config), edge, sampler, rng)


def _step(config, edge, sampler: _SplitSampler, rng) -> tuple[int, ...]:
    i, j = edge
    ni, nj = config[i], config[j]
    ki = sampler.draw(0, ni, rng)
    kj = sampler.draw(1, nj, rng)
    out = list(config)
    out[i] = kj + ni - ki
    out[j] = ki + nj - kj
    return tuple(out)


def run(graph: Graph, spec: ModelSpec, init, tmax: float, seed: int) -> Trajectory:
    """Simulate until ``tmax``; one global clock of rate |E|, uniform edges."""
    if tmax <= 0:
        raise ParameterError("tmax must be positive")
    _validate(graph, spec, init)
    rng = make_rng(seed)
    sampler = _SplitSampler(spec)
    config = tuple(init)
    times: list[float] = []
    configs: list[tuple[int, ...]] = []
    m = len(graph.edges)
    if m:
        t = 0.0
        total = sum(config)
        while True:
            t += rng.exponential(1.0 / m)
            if t > tmax:
                break
            edge = graph.edges[int(rng.integers(m))]
            config = _step(config, edge, sampler, rng)
            if sum(config) != total:
                raise RuntimeError("mass conservation violated")
            times.append(t)
            configs.append(config)
    return Trajectory(tuple(init), times, configs, seed, spec_label(spec), graph)


@dataclass
class Histogram:
    """Thinned time-sampled occupation counts after burn-in."""

    graph: Graph
    model: str
    samples: int
    burn_in: int
    thin: float
    seed: int
    per_vertex: list[Counter] = field(default_factory=list)
    joint: Counter | None = None

    def vertex_pmf(self, v: int) -> dict[int, float]:
        counts = self.per_vertex[v]
        total = sum(counts.values())
        return {k: c / total for k, c in sorted(counts.items())}


def stationary_histogram(
    graph: Graph,
    spec: ModelSpec,
    init,
    burn_in: int,
    samples: int,
    thin: float,
    seed: int,
) -> Histogram:
    """Histogram of the configuration sampled every ``thin`` time units."""
    _validate(graph, spec, init)
    if samples <= 0 or burn_in < 0 or thin <= 0:
        raise ParameterError("samples, burn_in, thin must be positive")
    if not graph.is_connected():
        warnings.warn("graph is disconnected; mass is frozen per component")
    rng = make_rng(seed)
    sampler = _SplitSampler(spec)
    config = tuple(init)
    per_vertex = [Counter() for _ in range(graph.n_vertices)]
    joint = Counter() if graph.n_vertices <= 3 else None
    m = len(graph.edges)

    def record(cfg):
        for v, x in enumerate(cfg):
            per_vertex[v][x] += 1
        if joint is not None:
            joint[cfg] += 1

    if m == 0:
        for _ in range(samples):
            record(config)
        return Histogram(graph, spec_label(spec), samples, burn_in, thin, seed, per_vertex, joint)

    t = 0.0
    for _ in range(burn_in):
        t += rng.exponential(1.0 / m)
        edge = graph.edges[int(rng.integers(m))]
        config = _step(config, edge, sampler, rng)
    next_sample = t
    collected = 0
    while collected < samples:
        dt = rng.exponential(1.0 / m)
        t_next = t + dt
        while next_sample < t_next and collected < samples:
            record(config)
            collected += 1
            next_sample += thin
        if collected >= samples:
            break
        t = t_next
        edge = graph.edges[int(rng.integers(m))]
        config = _step(config, edge, sampler, rng)
    return Histogram(graph, spec_label(spec), samples, burn_in, thin, seed, per_vertex, joint)


def one_step_kernel_counts(spec: ModelSpec, total: int, events: int, seed: int):
    """Transition counts of the embedded two-agent jump chain on one sector."""
    sector = models.pair_space(spec).sector(total)
    if sector.dim == 0:
        raise CapacityError(f"no valid two-agent states with total {total}")
    config = sector.states[0]
    _validate(Graph(2, ((0, 1),)), spec, config)
    rng = make_rng(seed)
    sampler = _SplitSampler(spec)
    counts: dict[tuple, Counter] = {}
    for _ in range(events):
        new = _step(config, (0, 1), sampler, rng)
        counts.setdefault(config, Counter())[new] += 1
        config = new
    return counts


def dual_moment_estimate(graph: Graph, spec: ModelSpec, init, t: float) -> np.ndarray:
    """Expected wealth per vertex at time ``t`` via the one-walker semigroup.

    A single dual walker moves as the model's own single-unit chain: across
    each edge it hops with the two-agent transition probability from (1,0).
    The one-unit duality factor is linear in the wealth, d(1, n) = c n, so
    the walker's semigroup transports c-weighted wealths:
    E[n_i(t)] = (1/c_i) sum_j p_t(i -> j) c_j n_j(0).
    """
    _validate(graph, spec, init)
    violation = models.duality_hypothesis_violation(spec)
    if violation is not None:
        raise ModelError(f"dual prediction needs the self-duality hypothesis: {violation}")
    if graph.n_vertices > 100:
        raise ParameterError("dual estimate limited to 100 vertices")
    pi1 = models.transition_operator(spec, 1, method="direct")
    sec = models.pair_space(spec).sector(1)
    forward = float(pi1.blocks[1][sec.index[(1, 0)], sec.index[(0, 1)]])
    backward = float(pi1.blocks[1][sec.index[(0, 1)], sec.index[(1, 0)]])
    q = np.zeros((graph.n_vertices, graph.n_vertices))
    for u, v in graph.edges:
        q[u, v] += forward
        q[v, u] += backward
    np.fill_diagonal(q, -q.sum(axis=1))
    dual = models.duality_function(spec)
    coeff = np.ones(graph.n_vertices)
    if not models.is_exchange_symmetric(spec) and graph.edges:
        u, v = graph.edges[0]
        coeff[u] = float(dual.factors[0](1, 1))
        coeff[v] = float(dual.factors[1](1, 1))
    else:
        coeff[:] = float(dual.factors[0](1, 1))
    weighted = expm(q * t) @ (coeff * np.asarray(init, dtype=float))
    return weighted / coeff


def mc_mean_wealth(
    graph: Graph, spec: ModelSpec, init, t: float, replicas: int, seed: int
) -> np.ndarray:
    """Monte Carlo estimate of the expected wealth per vertex at time ``t``."""
    _validate(graph, spec, init)
    sampler = _SplitSampler(spec)
    acc = np.zeros(graph.n_vertices)
    m = len(graph.edges)
    if m == 0:
        return np.asarray(init, dtype=float)
    for r in range(replicas):
        rng = make_rng(seed, stream=r + 1)
        config = tuple(init)
        clock = 0.0
        while True:
            clock += rng.exponential(1.0 / m)
            if clock > t:
                break
            edge = graph.edges[int(rng.integers(m))]
            config = _step(config, edge, sampler, rng)
        acc += config
    return acc / replicas


# ---------------------------------------------------------------------------
# exports


def trajectory_to_csv(traj: Trajectory) -> str:
    lines = ["time,vertex,wealth"]
    for v, x in enumerate(traj.initial):
        lines.append(f"0.0,{v},{x}")
    for t, cfg in zip(traj.times, traj.configs):
        for v, x in enumerate(cfg):
            lines.append(f"{t!r},{v},{x}")
    return "\n".join(lines) + "\n"


def histogram_to_csv(hist: Histogram) -> str:
    lines = ["vertex,wealth,count"]
    for v, counts in enumerate(hist.per_vertex):
        for wealth in sorted(counts):
            lines.append(f"{v},{wealth},{counts[wealth]}")
    return "\n".join(lines) + "\n"


def joint_histogram_to_csv(hist: Histogram) -> str:
    if hist.joint is None:
        raise ParameterError("joint histogram only kept for graphs with <= 3 vertices")
    lines = ["state,count"]
    for state in sorted(hist.joint):
        label = " ".join(str(x) for x in state)
        lines.append(f"{label},{hist.joint[state]}")
    return "\n".join(lines) + "\n"


def tv_distance(counts: Counter, pmf) -> float:
    """Total-variation distance between empirical counts and an exact pmf."""
    total = sum(counts.values())
    support = set(counts) | set(pmf.support)
    acc = 0.0
    for k in support:
        acc += abs(counts.get(k, 0) / total - float(pmf.prob(k)))
    return acc / 2.0

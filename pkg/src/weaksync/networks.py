"""Network constructors: reference topologies and random graph families.

Only component sizes are known for the reference networks, not edge lists, so
these builders generate graphs with the requested bicomponent structure from a seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedDigraph


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _weight(rng, weights):
    if weights is None:
        return 1.0
    lo, hi = weights
    return float(rng.uniform(lo, hi))


def _cycle_with_chords(nodes, rng, chord_prob, weights, edges):
    nodes = list(nodes)
    if len(nodes) == 1:
        return
    order = list(rng.permutation(nodes))
    for a, b in zip(order, order[1:] + order[:1]):
        edges[(int(a), int(b))] = _weight(rng, weights)
    for a in nodes:
        for b in nodes:
            if a != b and (a, b) not in edges and rng.random() < chord_prob:
                edges[(a, b)] = _weight(rng, weights)


@dataclass(frozen=True)
class LayeredNetwork:
    graph: WeightedDigraph
    basic: tuple[tuple[int, ...], ...]
    nonbasic: tuple[tuple[int, ...], ...]


def layered_network(
    basic_sizes,
    nonbasic_sizes=(),
    seed=None,
    chord_prob: float = 0.15,
    cross_prob: float = 0.1,
    weights=None,
    shuffle: bool = False,
) -> LayeredNetwork:
    """Graph whose condensation has the requested basic and non-basic components.

    Each component is a directed cycle plus random chords.  Non-basic component
    ``c`` receives at least one edge from an earlier component (basic or
    non-basic), so edges only run forward and no two components merge.
    ``weights=(lo, hi)`` draws uniform weights; default is unit weight.
    """
    rng = _rng(seed)
    sizes = list(basic_sizes) + list(nonbasic_sizes)
    if not basic_sizes or min(sizes) < 1:
        raise ValueError("need at least one basic component and positive sizes")
    total = sum(sizes)
    labels = rng.permutation(total) if shuffle else np.arange(total)
    comps = []
    start = 0
    for s in sizes:
        comps.append([int(v) for v in labels[start:start + s]])
        start += s
    edges: dict[tuple[int, int], float] = {}
    for comp in comps:
        _cycle_with_chords(comp, rng, chord_prob, weights, edges)
    nb = len(basic_sizes)
    for ci in range(nb, len(comps)):
        upstream = [v for comp in comps[:ci] for v in comp]
        target = comps[ci]
        src = int(rng.choice(upstream))
        edges[(src, int(rng.choice(target)))] = _weight(rng, weights)
        for s in upstream:
            for t in target:
                if (s, t) not in edges and rng.random() < cross_prob:
                    edges[(s, t)] = _weight(rng, weights)
    graph = WeightedDigraph(total, tuple(sorted((s, t, w) for (s, t), w in edges.items())))
    return LayeredNetwork(
        graph,
        tuple(tuple(sorted(c)) for c in comps[:nb]),
        tuple(tuple(sorted(c)) for c in comps[nb:]),
    )


@dataclass(frozen=True)
class BrokenLinkPair:
    connected: LayeredNetwork
    broken: LayeredNetwork
    bridges: tuple[tuple[int, int], ...]


def broken_link_network(basic_sizes, nonbasic_sizes, seed=None, **kw) -> BrokenLinkPair:
    """A graph without spanning tree plus the version with its bridge links restored.

    Bridges run from the first basic component into each other basic component,
    so restoring them leaves a single basic component (a directed spanning tree).
    """
    rng = _rng(seed)
    broken = layered_network(basic_sizes, nonbasic_sizes, seed=rng, **kw)
    root = broken.basic[0]
    bridges = []
    for comp in broken.basic[1:]:
        bridges.append((int(rng.choice(root)), int(rng.choice(comp))))
    edges = list(broken.graph.edges) + [(s, t, 1.0) for s, t in bridges]
    connected_graph = WeightedDigraph(broken.graph.node_count, tuple(sorted(edges)))
    first = broken.basic[0]
    demoted = broken.basic[1:]
    connected = LayeredNetwork(connected_graph, (first,), tuple(demoted) + broken.nonbasic)
    return BrokenLinkPair(connected, broken, tuple(bridges))


def large_network_pair(seed=2023) -> BrokenLinkPair:
    """Breaking two links leaves basic sizes 30/8/4 and non-basic 10/6/10.

    Those sizes add up to 68 agents, so that is the node count here.
    """
    return broken_link_network((30, 8, 4), (10, 6, 10), seed=seed)


def thirty_node_network(seed=2023) -> LayeredNetwork:
    """30 agents without spanning tree: basic 10/6/4, non-basic 4/6."""
    return layered_network((10, 6, 4), (4, 6), seed=seed)


def six_bicomponent_network(seed=7) -> LayeredNetwork:
    """Small graph with 6 bicomponents of which 3 are basic."""
    return layered_network((3, 2, 1), (2, 3, 1), seed=seed)


def spanning_tree_network(n_agents: int, seed=None, **kw) -> LayeredNetwork:
    """Single basic component (about half the nodes) feeding a chain of non-basic ones."""
    rng = _rng(seed)
    root = max(2, n_agents // 2)
    rest = n_agents - root
    sizes = []
    while rest > 0:
        s = int(min(rest, rng.integers(1, 5)))
        sizes.append(s)
        rest -= s
    return layered_network((root,), tuple(sizes), seed=rng, **kw)


def random_digraph(n_agents: int, seed=None, edge_prob: float = 0.3, weights=(0.5, 2.0)) -> WeightedDigraph:
    rng = _rng(seed)
    edges = []
    for s in range(n_agents):
        for t in range(n_agents):
            if s != t and rng.random() < edge_prob:
                edges.append((s, t, _weight(rng, weights)))
    return WeightedDigraph(n_agents, tuple(edges))


def random_strongly_connected(n_agents: int, seed=None, chord_prob: float = 0.3, weights=(0.5, 2.0)) -> WeightedDigraph:
    rng = _rng(seed)
    edges: dict[tuple[int, int], float] = {}
    _cycle_with_chords(range(n_agents), rng, chord_prob, weights, edges)
    return WeightedDigraph(n_agents, tuple(sorted((s, t, w) for (s, t), w in edges.items())))


def random_condensation_graph(max_nodes: int, seed=None, weights=(0.5, 2.0)) -> LayeredNetwork:
    """Random DAG of strongly connected pieces with 1-3 basic components."""
    rng = _rng(seed)
    total = int(rng.integers(2, max_nodes + 1))
    k = int(rng.integers(1, min(3, total - 1) + 1))
    sizes = [1] * k
    remaining = total - k
    for i in range(k):
        extra = int(rng.integers(0, remaining + 1)) if i < k - 1 else 0
        extra = min(extra, remaining - 1)
        sizes[i] += max(extra, 0)
        remaining -= max(extra, 0)
    nonbasic = []
    while remaining > 0:
        s = int(min(remaining, rng.integers(1, 4)))
        nonbasic.append(s)
        remaining -= s
    return layered_network(tuple(sizes), tuple(nonbasic), seed=rng, weights=weights, cross_prob=0.25, shuffle=True)

"""Weighted directed communication graphs, Laplacians and bicomponent structure.

Edges are stored as ``(source, target, weight)``.  An edge ``j -> i`` with
weight ``w`` sets ``a_ij = w``: agent ``i`` receives information from agent
``j``, so row ``i`` of the adjacency matrix collects incoming weights.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg


class GraphError(ValueError):
    """Invalid graph description."""


class GraphFormatError(GraphError):
    """Edge-list document could not be parsed."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


class SelfLoopError(GraphError):
    pass


class NonPositiveWeightError(GraphError):
    pass


class DecompositionError(RuntimeError):
    """Internal inconsistency in the condensation (e.g. singular grounded Laplacian)."""


@dataclass(frozen=True)
class WeightedDigraph:
    node_count: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if not isinstance(self.node_count, (int, np.integer)) or self.node_count < 1:
            raise GraphError(f"node_count must be a positive integer, got {self.node_count!r}")
        seen = set()
        clean = []
        for source, target, weight in self.edges:
            source, target, weight = int(source), int(target), float(weight)
            if not (0 <= source < self.node_count and 0 <= target < self.node_count):
                raise GraphError(f"edge ({source}, {target}) has a node index outside [0, {self.node_count})")
            if source == target:
                raise SelfLoopError(f"self-loop at node {source}")
            if not (weight > 0.0) or not math.isfinite(weight):
                raise NonPositiveWeightError(f"edge ({source}, {target}) has weight {weight}; weights must be finite and > 0")
            if (source, target) in seen:
                raise GraphError(f"duplicate edge ({source}, {target})")
            seen.add((source, target))
            clean.append((source, target, weight))
        object.__setattr__(self, "node_count", int(self.node_count))
        object.__setattr__(self, "edges", tuple(clean))

    @classmethod
    def from_adjacency(cls, adjacency) -> "WeightedDigraph":
        """Build from ``a_ij`` (row = receiving node, column = sending node)."""
        a = np.asarray(adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency must be square")
        targets, sources = np.nonzero(a)
        edges = [(int(j), int(i), float(a[i, j])) for i, j in zip(targets, sources)]
        edges.sort()
        return cls(a.shape[0], tuple(edges))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count))
        for source, target, weight in self.edges:
            a[target, source] = weight
        return a

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for source, target, _ in self.edges:
            out[source].append(target)
        for nbrs in out:
            nbrs.sort()
        return out

    def relabel(self, perm: Sequence[int]) -> "WeightedDigraph":
        """Return the graph with old node ``v`` renamed to ``perm[v]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.node_count)):
            raise GraphError("relabeling must be a permutation of the node set")
        return WeightedDigraph(
            self.node_count,
            tuple(sorted((perm[s], perm[t], w) for s, t, w in self.edges)),
        )

    def without_edges(self, pairs: Iterable[tuple[int, int]]) -> "WeightedDigraph":
        drop = {(int(s), int(t)) for s, t in pairs}
        missing = drop - {(s, t) for s, t, _ in self.edges}
        if missing:
            raise GraphError(f"edges not present: {sorted(missing)}")
        return WeightedDigraph(self.node_count, tuple(e for e in self.edges if (e[0], e[1]) not in drop))

    def to_text(self) -> str:
        lines = [str(self.node_count)]
        lines += [f"{s} {t} {w!r}" for s, t, w in self.edges]
        return "\n".join(lines) + "\n"


def load_graph(text: str, path: str | None = None) -> WeightedDigraph:
    """Parse an edge-list document.

    The first non-comment line holds the node count ``N``; each further line is
    ``source target weight`` with 0-based indices.  ``#`` starts a comment.
    """
    node_count = None
    edges = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if node_count is None:
            if len(fields) != 1:
                raise GraphFormatError("expected the node count on the first line", lineno, path)
            try:
                node_count = int(fields[0])
            except ValueError:
                raise GraphFormatError(f"node count {fields[0]!r} is not an integer", lineno, path) from None
            if node_count < 1:
                raise GraphFormatError(f"node count must be positive, got {node_count}", lineno, path)
            continue
        if len(fields) != 3:
            raise GraphFormatError(f"expected 'source target weight', got {line!r}", lineno, path)
        try:
            source, target = int(fields[0]), int(fields[1])
            weight = float(fields[2])
        except ValueError:
            raise GraphFormatError(f"malformed edge line {line!r}", lineno, path) from None
        if not (0 <= source < node_count and 0 <= target < node_count):
            raise GraphFormatError(f"node index out of range [0, {node_count})", lineno, path)
        if source == target:
            raise SelfLoopError(f"{path + ':' if path else ''}{lineno}: self-loop at node {source}")
        if not (weight > 0.0) or not math.isfinite(weight):
            raise NonPositiveWeightError(
                f"{path + ':' if path else ''}{lineno}: weight {fields[2]} must be finite and > 0"
            )
        if (source, target) in seen:
            raise GraphFormatError(
                f"duplicate edge ({source}, {target}), first given on line {seen[source, target]}", lineno, path
            )
        seen[source, target] = lineno
        edges.append((source, target, weight))
    if node_count is None:
        raise GraphFormatError("empty graph document: missing node count", None, path)
    return WeightedDigraph(node_count, tuple(edges))


def build_laplacian(g: WeightedDigraph) -> np.ndarray:
    """Dense Laplacian ``L = D - A`` with ``D`` the diagonal of incoming weight sums."""
    a = g.adjacency()
    lap = -a
    lap[np.diag_indices_from(lap)] = a.sum(axis=1)
    lap.setflags(write=False)
    return lap


def strongly_connected_components(g: WeightedDigraph) -> list[tuple[int, ...]]:
    """Tarjan's algorithm, iterative.

    Components come out in reverse topological order of the condensation
    (every component precedes the components that feed it).  Roots are tried in
    increasing node index and successors in increasing order, so the output is
    deterministic.  Each component is returned as a sorted tuple.
    """
    succ = g.successors()
    n = g.node_count
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    result: list[tuple[int, ...]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            nbrs = succ[v]
            if pos < len(nbrs):
                work[-1] = (v, pos + 1)
                w = nbrs[pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                result.append(tuple(sorted(comp)))
    return result


@dataclass(frozen=True)
class CondensationDecomposition:
    """Bicomponents of a graph arranged in the canonical block layout.

    ``bicomponents`` lists non-basic components first, then basic ones, each
    group ordered by smallest contained node.  ``permutation[p]`` is the
    original node placed at position ``p``; ``L[perm][:, perm]`` has the grounded
    block ``L_0`` in its leading ``nonbasic_count`` rows, followed by one
    diagonal block per basic bicomponent.
    """

    node_count: int
    bicomponents: tuple[tuple[int, ...], ...]
    basic_flags: tuple[bool, ...]
    permutation: np.ndarray
    nonbasic_count: int
    basic_slices: tuple[slice, ...]
    topological_order: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def basic_count(self) -> int:
        return len(self.basic_slices)

    @property
    def basic_components(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c for c, b in zip(self.bicomponents, self.basic_flags) if b)

    @property
    def nonbasic_components(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c for c, b in zip(self.bicomponents, self.basic_flags) if not b)

    @property
    def nonbasic_nodes(self) -> np.ndarray:
        return self.permutation[: self.nonbasic_count]

    def permute(self, lap: np.ndarray) -> np.ndarray:
        p = self.permutation
        return np.asarray(lap)[np.ix_(p, p)]

    def blocks(self, lap: np.ndarray) -> dict:
        """Split the permuted Laplacian into ``L0``, ``L0i`` and ``Li`` blocks."""
        pl = self.permute(lap)
        n0 = self.nonbasic_count
        head = slice(0, n0)
        return {
            "L0": pl[head, head],
            "L0i": [pl[head, s] for s in self.basic_slices],
            "Li": [pl[s, s] for s in self.basic_slices],
        }

    def component_of(self) -> np.ndarray:
        """Map node -> index into ``bicomponents``."""
        out = np.empty(self.node_count, dtype=int)
        for ci, comp in enumerate(self.bicomponents):
            out[list(comp)] = ci
        return out


def condense(g: WeightedDigraph) -> CondensationDecomposition:
    sccs = strongly_connected_components(g)
    comp_of = np.empty(g.node_count, dtype=int)
    for ci, comp in enumerate(sccs):
        comp_of[list(comp)] = ci
    has_incoming = [False] * len(sccs)
    for source, target, _ in g.edges:
        if comp_of[source] != comp_of[target]:
            has_incoming[comp_of[target]] = True

    basic = sorted((c for c, inc in zip(sccs, has_incoming) if not inc), key=min)
    nonbasic = sorted((c for c, inc in zip(sccs, has_incoming) if inc), key=min)
    ordered = tuple(nonbasic) + tuple(basic)
    perm = np.fromiter((v for c in ordered for v in c), dtype=int, count=g.node_count)
    n0 = sum(len(c) for c in nonbasic)
    slices = []
    start = n0
    for c in basic:
        slices.append(slice(start, start + len(c)))
        start += len(c)
    perm.setflags(write=False)
    return CondensationDecomposition(
        node_count=g.node_count,
        bicomponents=ordered,
        basic_flags=tuple([False] * len(nonbasic) + [True] * len(basic)),
        permutation=perm,
        nonbasic_count=n0,
        basic_slices=tuple(slices),
        topological_order=tuple(sccs),
    )


def has_directed_spanning_tree(d: CondensationDecomposition) -> bool:
    return d.basic_count == 1


@dataclass(frozen=True)
class BetaMatrix:
    """Row ``r`` gives the convex weights of non-basic node ``nodes[r]`` over the
    basic bicomponents (columns, in ``CondensationDecomposition`` order)."""

    nodes: tuple[int, ...]
    values: np.ndarray

    def row(self, node: int) -> np.ndarray:
        return self.values[self.nodes.index(node)]


def compute_beta(d: CondensationDecomposition, lap: np.ndarray) -> BetaMatrix:
    """Asymptotic mixing weights ``-L0^{-1} L0i 1`` for every non-basic node."""
    k = d.basic_count
    n0 = d.nonbasic_count
    if k < 1:
        raise DecompositionError("decomposition has no basic bicomponent")
    if n0 == 0:
        return BetaMatrix((), np.zeros((0, k)))
    b = d.blocks(lap)
    l0 = b["L0"]
    rhs = np.column_stack([blk.sum(axis=1) for blk in b["L0i"]])
    with warnings.catch_warnings():
        # singularity is diagnosed from the pivots below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(l0, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(np.abs(l0).max(), 1.0)
    if pivots.min() <= n0 * np.finfo(float).eps * scale:
        raise DecompositionError("grounded Laplacian L0 is singular; the basic/non-basic split is inconsistent")
    beta = -scipy.linalg.lu_solve((lu, piv), rhs)
    # unreachable basic components give exact zeros up to rounding
    beta[(beta < 0.0) & (beta > -1e-12)] = 0.0
    beta.setflags(write=False)
    return BetaMatrix(tuple(int(v) for v in d.nonbasic_nodes), beta)

"""Undirected graph structure of a model and feedback vertex set selection.

The graph of a model has one edge per stored nonzero off-diagonal entry.
Everything here is deterministic: neighbor lists are sorted ascending and
every tie among candidate nodes is broken toward the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .errors import ModelValueError
from .model import GaussianInfoModel

__all__ = [
    "UndirectedGraph",
    "FvsResult",
    "build_graph",
    "is_acyclic",
    "find_cycle",
    "girth",
    "two_core",
    "connected_components",
    "brute_force_min_fvs",
    "greedy_fvs",
    "select_pseudo_fvs",
]


@dataclass(frozen=True, eq=False)
class UndirectedGraph:
    """Adjacency lists, sorted ascending, with parallel |J_ij| edge weights."""

    n: int
    neighbors: tuple[tuple[int, ...], ...]
    weights: tuple[tuple[float, ...], ...]

    @property
    def m(self) -> int:
        return sum(len(nb) for nb in self.neighbors) // 2

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])


def build_graph(model: GaussianInfoModel) -> UndirectedGraph:
    """Graph of the model: one edge per stored edge with nonzero weight."""
    nbrs: list[list[int]] = [[] for _ in range(model.n)]
    wts: list[list[float]] = [[] for _ in range(model.n)]
    for i, j, w in model.edges:
        if w == 0.0:
            continue
        nbrs[i].append(j)
        wts[i].append(abs(w))
        nbrs[j].append(i)
        wts[j].append(abs(w))
    # model.edges is sorted by (i, j), so each list is already ascending for
    # the lower endpoint; sort jointly to cover the upper endpoint's list.
    out_n = []
    out_w = []
    for i in range(model.n):
        order = sorted(range(len(nbrs[i])), key=lambda t: nbrs[i][t])
        out_n.append(tuple(nbrs[i][t] for t in order))
        out_w.append(tuple(wts[i][t] for t in order))
    return UndirectedGraph(n=model.n, neighbors=tuple(out_n), weights=tuple(out_w))


def _graph_from_sets(n: int, adj: Sequence[set[int]], weight_of) -> UndirectedGraph:
    nbrs = tuple(tuple(sorted(adj[i])) for i in range(n))
    wts = tuple(tuple(weight_of(i, j) for j in nbrs[i]) for i in range(n))
    return UndirectedGraph(n=n, neighbors=nbrs, weights=wts)


def is_acyclic(g: UndirectedGraph, removed: Iterable[int] = ()) -> bool:
    """True when the graph minus `removed` is a forest (union-find over edges)."""
    removed = set(removed)
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(g.n):
        if i in removed:
            continue
        for j in g.neighbors[i]:
            if j <= i or j in removed:
                continue
            ri, rj = find(i), find(j)
            if ri == rj:
                return False
            parent[ri] = rj
    return True


def find_cycle(g: UndirectedGraph, removed: Iterable[int] = ()) -> list[int] | None:
    """One cycle of the graph minus `removed`, as a node list, or None.

    Depth-first search with an explicit iterator stack, so every non-tree
    edge points at an ancestor and the cycle falls out of the parent chain.
    """
    removed = set(removed)
    state: dict[int, int] = {}  # 1 = on the DFS stack, 2 = finished
    parent: dict[int, int] = {}
    for root in range(g.n):
        if root in removed or root in state:
            continue
        parent[root] = -1
        state[root] = 1
        stack = [(root, iter(g.neighbors[root]))]
        while stack:
            node, it = stack[-1]
            advanced = False
            for nb in it:
                if nb in removed or nb == parent[node]:
                    continue
                st = state.get(nb, 0)
                if st == 1:
                    cycle = [node]
                    cur = node
                    while cur != nb:
                        cur = parent[cur]
                        cycle.append(cur)
                    return cycle
                if st == 0:
                    parent[nb] = node
                    state[nb] = 1
                    stack.append((nb, iter(g.neighbors[nb])))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()
    return None


def girth(g: UndirectedGraph) -> float:
    """Length of the shortest cycle, math.inf for forests.

    BFS from every node; a non-tree edge met at depths (du, dv) witnesses a
    closed walk of length du + dv + 1 through the root.  The minimum over all
    roots is the girth.  Branches deeper than best/2 cannot improve the bound
    and are pruned.
    """
    best = math.inf
    for root in range(g.n):
        if not g.neighbors[root]:
            continue
        dist = {root: 0}
        par = {root: -1}
        queue = [root]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            if 2 * dist[u] + 1 >= best:
                break
            for v in g.neighbors[u]:
                if v == par[u]:
                    continue
                if v in dist:
                    cand = dist[u] + dist[v] + 1
                    if cand < best:
                        best = cand
                else:
                    dist[v] = dist[u] + 1
                    par[v] = u
                    queue.append(v)
        if best == 3:
            break
    return best


def two_core(g: UndirectedGraph) -> tuple[UndirectedGraph, frozenset[int]]:
    """Iteratively strip nodes of degree <= 1.

    Returns the core as a graph on the same node set (peeled nodes keep empty
    neighbor lists) together with the set of removed nodes.  The core is empty
    exactly when the graph is a forest.
    """
    adj = [set(nb) for nb in g.neighbors]
    wmap = {}
    for i in range(g.n):
        for j, w in zip(g.neighbors[i], g.weights[i]):
            wmap[(i, j)] = w
    removed = set()
    stack = [i for i in range(g.n) if len(adj[i]) <= 1]
    while stack:
        i = stack.pop()
        if i in removed:
            continue
        removed.add(i)
        for j in adj[i]:
            adj[j].discard(i)
            if len(adj[j]) <= 1 and j not in removed:
                stack.append(j)
        adj[i] = set()
    core = _graph_from_sets(g.n, adj, lambda i, j: wmap[(i, j)])
    return core, frozenset(removed)


def connected_components(g: UndirectedGraph) -> list[list[int]]:
    """Connected components as sorted node lists, ordered by smallest node."""
    seen = [False] * g.n
    comps = []
    for root in range(g.n):
        if seen[root]:
            continue
        comp = [root]
        seen[root] = True
        qi = 0
        while qi < len(comp):
            u = comp[qi]
            qi += 1
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
        comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class FvsResult:
    """A (pseudo) feedback vertex set.

    nodes are in selection order; is_full_fvs says whether removing them
    leaves a forest; scores are the selection scores at pick time (empty for
    the brute-force search, which has no scores).
    """

    nodes: tuple[int, ...]
    is_full_fvs: bool
    scores: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "full": self.is_full_fvs,
            "scores": list(self.scores),
        }


def brute_force_min_fvs(g: UndirectedGraph, max_k: int | None = None) -> FvsResult | None:
    """Smallest feedback vertex set by exhaustive search.

    Subsets are tried by increasing size and lexicographic order, so the
    result is deterministic.  Returns None when no FVS of size <= max_k
    exists.  Exponential: meant for n <= 25 or max_k <= 5.
    """
    if max_k is None:
        max_k = g.n
    for size in range(max_k + 1):
        for subset in combinations(range(g.n), size):
            if is_acyclic(g, subset):
                return FvsResult(nodes=subset, is_full_fvs=True, scores=())
    return None


def greedy_fvs(g: UndirectedGraph) -> FvsResult:
    """Full feedback vertex set by repeated max-degree removal.

    Peels tree branches (2-core) between picks; ties go to the lowest index.
    Scores record the degree at pick time.
    """
    adj = [set(nb) for nb in g.neighbors]
    chosen: list[int] = []
    scores: list[float] = []
    while True:
        _peel(adj)
        best, best_deg = -1, 0
        for i in range(g.n):
            d = len(adj[i])
            if d > best_deg:
                best, best_deg = i, d
        if best < 0:
            break
        chosen.append(best)
        scores.append(float(best_deg))
        _remove_node(adj, best)
    return FvsResult(nodes=tuple(chosen), is_full_fvs=True, scores=tuple(scores))


def select_pseudo_fvs(model: GaussianInfoModel, k: int, worst: bool = False) -> FvsResult:
    """Pick up to k feedback nodes by largest absolute-strength score.

    Each round first strips all tree branches (2-core cleanup), then scores
    every remaining node as s(i) = sum of |J_ij| over residual neighbors and
    removes the argmax (lowest index on ties).  Stops early once the residual
    graph is a forest, so the result can be shorter than k; is_full_fvs tells
    whether the remainder is a forest.  With worst=True the argmin is removed
    instead, a deliberately bad selection used as a control.
    """
    if k < 0:
        raise ModelValueError(f"k must be non-negative, got {k}")
    g = build_graph(model)
    adj = [set(nb) for nb in g.neighbors]
    wmap = {}
    for i in range(g.n):
        for j, w in zip(g.neighbors[i], g.weights[i]):
            wmap[(i, j)] = w
    chosen: list[int] = []
    scores: list[float] = []
    while len(chosen) < k:
        _peel(adj)
        if not any(adj[i] for i in range(g.n)):
            break
        best = -1
        best_score = 0.0
        for i in range(g.n):
            if not adj[i]:
                continue
            s = 0.0
            for j in sorted(adj[i]):
                s += wmap[(i, j)]
            if best < 0 or (s < best_score if worst else s > best_score):
                best, best_score = i, s
        chosen.append(best)
        scores.append(best_score)
        _remove_node(adj, best)
    _peel(adj)
    full = not any(adj[i] for i in range(g.n))
    return FvsResult(nodes=tuple(chosen), is_full_fvs=full, scores=tuple(scores))


def _peel(adj: list[set[int]]) -> None:
    # strip degree <= 1 nodes until only the 2-core remains
    stack = [i for i in range(len(adj)) if 0 < len(adj[i]) <= 1]
    gone = set()
    for i in range(len(adj)):
        if len(adj[i]) == 0:
            gone.add(i)
    while stack:
        i = stack.pop()
        if i in gone:
            continue
        gone.add(i)
        for j in adj[i]:
            adj[j].discard(i)
            if 0 < len(adj[j]) <= 1 and j not in gone:
                stack.append(j)
        adj[i] = set()


def _remove_node(adj: list[set[int]], i: int) -> None:
    for j in adj[i]:
        adj[j].discard(i)
    adj[i] = set()

"""Weighted multigraphs: Betti number, systole, greedy systolic sequence, MST."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SyskitError
from .z2 import rank_z2


@dataclass(frozen=True)
class WeightedGraph:
    """Finite multigraph with positive edge lengths.

    ``edges`` holds ``(u, v, length)`` triples; parallel edges and self-loops
    are allowed.  ``length_text`` optionally keeps the decimal strings a graph
    was read from so that writing it back is exact.
    """

    n_vertices: int
    edges: tuple
    length_text: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        edges = tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, (u, v, w) in enumerate(edges):
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise SyskitError("PARSE", f"edge {i} has an endpoint out of range")
            if not (w > 0 and math.isfinite(w)):
                raise SyskitError("NONPOSITIVE_LENGTH", f"edge {i} has length {w!r}")

    @property
    def n_edges(self):
        return len(self.edges)

    def total_length(self, active=None):
        if active is None:
            return math.fsum(w for _, _, w in self.edges)
        return math.fsum(self.edges[i][2] for i in active)

    def adjacency(self, active=None):
        adj = [[] for _ in range(self.n_vertices)]
        ids = range(self.n_edges) if active is None else sorted(active)
        for i in ids:
            u, v, w = self.edges[i]
            adj[u].append((v, w, i))
            if u != v:
                adj[v].append((u, w, i))
        return adj


@dataclass(frozen=True)
class GraphCycle:
    """Closed edge walk: ``vertices[k]`` -- ``edge_ids[k]`` -- ``vertices[k+1]`` (cyclically)."""

    vertices: tuple
    edge_ids: tuple
    length: float

    def edge_vector(self):
        vec = 0
        for e in self.edge_ids:
            vec ^= 1 << e
        return vec


def _components(n, edges, active=None):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    ids = range(len(edges)) if active is None else active
    for i in ids:
        u, v, _ = edges[i]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(x) for x in range(n)})


def betti_number(G: WeightedGraph, active=None) -> int:
    """Cycle rank e - v + c."""
    e = G.n_edges if active is None else len(active)
    return e - G.n_vertices + _components(G.n_vertices, G.edges, active)


def _path_excluding(adj, src, dst, banned, bound):
    """Dijkstra from src to dst avoiding edge ``banned``; None if dist >= bound."""
    dist = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        if d >= bound:
            return None
        if x == dst:
            path_v, path_e = [dst], []
            while x != src:
                px, e = prev[x]
                path_e.append(e)
                path_v.append(px)
                x = px
            return d, path_v[::-1], path_e[::-1]
        done.add(x)
        for y, w, e in adj[x]:
            if e == banned or y in done:
                continue
            nd = d + w
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                prev[y] = (x, e)
                heapq.heappush(heap, (nd, y))
    return None


def _systole(G, active=None):
    ids = list(range(G.n_edges)) if active is None else sorted(active)
    adj = G.adjacency(ids)
    best = math.inf
    best_cycle = None
    for i in ids:
        u, v, w = G.edges[i]
        if u == v:
            if w < best:
                best, best_cycle = w, GraphCycle((u,), (i,), w)
            continue
        found = _path_excluding(adj, v, u, i, best - w)
        if found is None:
            continue
        d, pv, pe = found
        if d + w < best:
            # walk u --i--> v then back along the path v ... u
            best = d + w
            best_cycle = GraphCycle(tuple([u] + pv[:-1]), tuple([i] + pe), best)
    return best, best_cycle


def graph_systole(G: WeightedGraph, active=None):
    """Shortest cycle as ``(length, GraphCycle)``; ties go to the lowest edge id."""
    if betti_number(G, active) == 0:
        raise SyskitError("FOREST", "graph has no cycles")
    return _systole(G, active)


def bst_bound(G: WeightedGraph, log=math.log, active=None) -> float:
    """Systolic upper bound 4 log(1+b)/b * length(G)."""
    b = betti_number(G, active)
    if b == 0:
        raise SyskitError("FOREST", "graph has no cycles")
    return 4.0 * log(1 + b) / b * G.total_length(active)


def greedy_step_bound(b, k, total_length, log=math.log):
    """Per-step bound 4 log(2+b-k)/(b-k+1) * length(Gamma_k) for 1-based k."""
    return 4.0 * log(2 + b - k) / (b - k + 1) * total_length


def greedy_systolic_sequence(G: WeightedGraph, count: int):
    """Repeatedly take a systolic cycle and delete its longest edge.

    Returns a list of ``(GraphCycle, removed_edge_id)``.  The removed edge is
    the longest one on the cycle, lowest id on ties.
    """
    b = betti_number(G)
    if count < 1 or count > b:
        raise SyskitError("FOREST", f"count {count} outside 1..{b}")
    active = set(range(G.n_edges))
    out = []
    for _ in range(count):
        _, cyc = _systole(G, active)
        removed = min(cyc.edge_ids, key=lambda e: (-G.edges[e][2], e))
        active.discard(removed)
        out.append((cyc, removed))
    return out


def minimum_spanning_tree(G: WeightedGraph):
    """Kruskal with edges sorted by (length, id); returns sorted edge ids."""
    parent = list(range(G.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for i in sorted(range(G.n_edges), key=lambda i: (G.edges[i][2], i)):
        u, v, _ = G.edges[i]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append(i)
    if len(tree) != G.n_vertices - 1 and G.n_vertices > 0:
        raise SyskitError("DISCONNECTED", "graph is not connected")
    return sorted(tree)


def cycle_rank(cycles) -> int:
    """Z2 rank of edge-incidence vectors of a list of GraphCycles."""
    return rank_z2(c.edge_vector() for c in cycles)


def read_wgraph(path) -> WeightedGraph:
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    try:
        tag, v, e = lines[0]
        if tag != "WGRAPH":
            raise ValueError(tag)
        v, e = int(v), int(e)
        rows = lines[1:]
        if len(rows) != e:
            raise ValueError("edge count mismatch")
        edges, texts = [], []
        for u, w, length in rows:
            edges.append((int(u), int(w), float(length)))
            texts.append(length)
    except (ValueError, IndexError) as exc:
        raise SyskitError("PARSE", f"bad WGRAPH file: {exc}") from None
    return WeightedGraph(v, tuple(edges), tuple(texts))


def write_wgraph(G: WeightedGraph, path):
    texts = G.length_text or tuple(repr(w) for _, _, w in G.edges)
    body = [f"WGRAPH {G.n_vertices} {G.n_edges}"]
    body += [f"{u} {v} {t}" for (u, v, _), t in zip(G.edges, texts)]
    Path(path).write_text("\n".join(body) + "\n")

"""Z2 homology of closed meshes: tree-cotree labels, loop classes, short loops."""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import SyskitError
from .mesh import TriMesh
from .z2 import insert_vector, rank_z2, reduce_vector  # noqa: F401  (re-exported)


@dataclass(frozen=True)
class TreeCotree:
    tree_edges: tuple
    cotree_edges: tuple
    signature_edges: tuple
    labels: tuple          # per-edge crossing bit mask
    genus: int

    @property
    def dim(self):
        return len(self.signature_edges)


@dataclass(frozen=True)
class MeshLoop:
    """Closed vertex walk with cached length and Z2 class bit mask."""

    vertices: tuple
    length: float
    cls: int
    dim: int

    @property
    def class_bits(self):
        return tuple((self.cls >> i) & 1 for i in range(self.dim))

    def edge_ids(self, M):
        return M.walk_edges(list(self.vertices))


def tree_cotree_basis(M: TriMesh) -> TreeCotree:
    """Primal BFS tree, dual BFS cotree and the 2g leftover edges.

    Edge ``e`` carries bit ``i`` when it lies on the dual cycle closed by the
    i-th leftover edge; a loop's class is the XOR of its edge labels.
    """
    cached = M.__dict__.get("_tree_cotree")
    if cached is not None:
        return cached
    if not M.is_closed:
        raise SyskitError("NOT_CLOSED", "mesh has boundary")
    if M.n_components != 1:
        raise SyskitError("NOT_CLOSED", "mesh must be connected")
    in_tree = [False] * M.n_edges
    seen = [False] * M.n_vertices
    seen[0] = True
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y, e in M.neighbors[x]:
            if not seen[y]:
                seen[y] = True
                in_tree[e] = True
                queue.append(y)
    nf = len(M.faces)
    fparent = [-1] * nf
    fparent_edge = [-1] * nf
    fdepth = [0] * nf
    fseen = [False] * nf
    fseen[0] = True
    in_cotree = [False] * M.n_edges
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for e in sorted(M.face_edges[f]):
            if in_tree[e]:
                continue
            for g in M.edge_faces[e]:
                if not fseen[g]:
                    fseen[g] = True
                    fparent[g], fparent_edge[g], fdepth[g] = f, e, fdepth[f] + 1
                    in_cotree[e] = True
                    queue.append(g)
    leftover = [e for e in range(M.n_edges) if not in_tree[e] and not in_cotree[e]]
    labels = [0] * M.n_edges
    for i, e in enumerate(leftover):
        bit = 1 << i
        labels[e] ^= bit
        f, g = M.edge_faces[e]
        while f != g:
            if fdepth[f] < fdepth[g]:
                f, g = g, f
            labels[fparent_edge[f]] ^= bit
            f = fparent[f]
    out = TreeCotree(tuple(e for e in range(M.n_edges) if in_tree[e]),
                     tuple(e for e in range(M.n_edges) if in_cotree[e]),
                     tuple(leftover), tuple(labels), len(leftover) // 2)
    M.__dict__["_tree_cotree"] = out
    return out


def walk_class(M: TriMesh, walk) -> int:
    tc = tree_cotree_basis(M)
    cls = 0
    for e in M.walk_edges(list(walk)):
        cls ^= tc.labels[e]
    return cls


def make_loop(M: TriMesh, walk) -> MeshLoop:
    walk = tuple(int(v) for v in walk)
    tc = tree_cotree_basis(M)
    return MeshLoop(walk, M.length_of_walk(list(walk)), walk_class(M, walk), tc.dim)


def homology_class(M: TriMesh, loop) -> tuple:
    """Crossing-parity vector of a loop (MeshLoop or vertex walk)."""
    walk = loop.vertices if isinstance(loop, MeshLoop) else loop
    cls = walk_class(M, walk)
    return tuple((cls >> i) & 1 for i in range(tree_cotree_basis(M).dim))


def loops_rank(loops) -> int:
    return rank_z2(l.cls for l in loops)


# --------------------------------------------------------------- fast finder
def _span_table(span, dim):
    table = np.zeros(1 << dim, dtype=bool)
    elems = [0]
    basis = {}
    for v in span:
        if insert_vector(basis, v):
            elems = elems + [x ^ v for x in elems]
    table[elems] = True
    return table


def shortest_loop_outside(M: TriMesh, span=(), banned_vertices=(), banned_edges=(), chunk=128):
    """Shortest closed edge walk whose class is outside ``span``.

    Exact on the edge graph: for every root the candidates are the loops
    closed by one non-tree edge of its shortest-path tree, and the optimum is
    always among them.  Returns ``None`` if no such loop exists.
    """
    tc = tree_cotree_basis(M)
    dim = tc.dim
    if dim == 0:
        return None
    if dim > 24:
        raise SyskitError("GENUS_TOO_LARGE", "label table too large")
    in_span = _span_table(list(span), dim)
    if in_span.all():
        return None
    bv = set(banned_vertices)
    be = set(banned_edges)
    eids = [e for e, (u, v) in enumerate(M.edges) if e not in be and u not in bv and v not in bv]
    if not eids:
        return None
    eu = np.array([M.edges[e][0] for e in eids])
    ev = np.array([M.edges[e][1] for e in eids])
    ew = np.array([M.lengths[e] for e in eids])
    el = np.array([tc.labels[e] for e in eids], dtype=np.int64)
    V = M.n_vertices
    keys = np.concatenate([eu * V + ev, ev * V + eu])
    order = np.argsort(keys)
    skeys = keys[order]
    slab = np.concatenate([el, el])[order]
    graph = M.csr(bv, be)
    from scipy.sparse.csgraph import dijkstra

    roots = [r for r in range(V) if r not in bv]
    best = (math.inf, None)
    for start in range(0, len(roots), chunk):
        rs = roots[start:start + chunk]
        dist, pred = dijkstra(graph, directed=False, indices=rs, return_predecessors=True)
        reach = pred >= 0
        p = np.where(reach, pred, np.arange(V)[None, :])
        idx = np.searchsorted(skeys, p * V + np.arange(V)[None, :])
        idx = np.clip(idx, 0, len(skeys) - 1)
        lab = np.where(reach, slab[idx], 0)
        anc = p.copy()
        rows = np.arange(len(rs))[:, None]
        for _ in range(int(math.ceil(math.log2(max(V, 2)))) + 1):
            lab = lab ^ lab[rows, anc]
            anc = anc[rows, anc]
        du, dv = dist[:, eu], dist[:, ev]
        total = du + ew[None, :] + dv
        cls = lab[:, eu] ^ lab[:, ev] ^ el[None, :]
        ok = np.isfinite(total) & ~in_span[cls]
        if not ok.any():
            continue
        masked = np.where(ok, total, np.inf)
        flat = int(np.argmin(masked))
        i, j = divmod(flat, len(eids))
        if masked[i, j] < best[0]:
            best = (float(masked[i, j]), (rs[i], j, pred[i].copy()))
    if best[1] is None:
        return None
    r, j, pr = best[1]
    u, v = int(eu[j]), int(ev[j])

    def up(x):
        out = [x]
        while out[-1] != r:
            out.append(int(pr[out[-1]]))
        return out[::-1]

    pu, pv = up(u), up(v)
    k = 0
    while k < min(len(pu), len(pv)) and pu[k] == pv[k]:
        k += 1
    walk = pu[k - 1:] + pv[k:][::-1]
    return make_loop(M, walk)


# -------------------------------------------------------------------- oracle
def shortest_nontrivial_loop_oracle(M: TriMesh, banned_vertices=(), banned_edges=()):
    """Brute force over the product of vertices and Z2 labels.

    Independent of :func:`shortest_loop_outside`: plain heapq Dijkstra on
    states ``(vertex, label)`` from every source, meeting two half-walks with
    different labels at a common vertex.  Returns ``(length, MeshLoop)``.
    """
    tc = tree_cotree_basis(M)
    if tc.dim > 6:
        raise SyskitError("GENUS_TOO_LARGE", f"2g = {tc.dim} exceeds 6")
    if tc.dim == 0:
        raise SyskitError("NO_NONTRIVIAL_CLASS", "genus 0 mesh")
    bv, be = set(banned_vertices), set(banned_edges)
    adj = [[(y, M.lengths[e], tc.labels[e]) for y, e in M.neighbors[x]
            if e not in be and y not in bv] for x in range(M.n_vertices)]
    best = math.inf
    best_walk = None
    for s in range(M.n_vertices):
        if s in bv:
            continue
        dist = {(s, 0): 0.0}
        prev = {}
        settled = {}
        heap = [(0.0, s, 0)]
        while heap:
            d, x, lab = heapq.heappop(heap)
            if d >= best:
                break
            if lab in settled.get(x, {}):
                continue
            here = settled.setdefault(x, {})
            for other, d2 in here.items():
                if d + d2 < best:
                    best = d + d2
                    best_walk = (s, x, lab, other, dict(prev))
            here[lab] = d
            for y, w, l in adj[x]:
                key = (y, lab ^ l)
                nd = d + w
                if nd < dist.get(key, math.inf):
                    dist[key] = nd
                    prev[key] = (x, lab)
                    heapq.heappush(heap, (nd, y, lab ^ l))
    if best_walk is None:
        raise SyskitError("NO_NONTRIVIAL_CLASS", "no loop with nonzero class")
    s, m, a, b, prev = best_walk

    def back(state):
        out = [state[0]]
        while state != (s, 0):
            state = prev[state]
            out.append(state[0])
        return out[::-1]

    pa, pb = back((m, a)), back((m, b))
    k = 0
    while k < min(len(pa), len(pb)) and pa[k] == pb[k]:
        k += 1
    walk = pa[k - 1:] + pb[k:-1][::-1] if pb[-1] == pa[-1] else pa[k - 1:] + pb[k:][::-1]
    return best, make_loop(M, _reduce_walk(walk))


def _reduce_walk(walk):
    """Drop immediate backtracks a-b-a from a closed walk."""
    w = list(walk)
    if len(w) > 1 and w[0] == w[-1]:
        w.pop()
    changed = True
    while changed and len(w) > 2:
        changed = False
        n = len(w)
        for i in range(n):
            if w[i] == w[(i + 2) % n]:
                j = (i + 1) % n
                for k in sorted({j, (i + 2) % n}, reverse=True):
                    del w[k]
                changed = True
                break
    return w

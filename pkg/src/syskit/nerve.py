"""Nerve graphs of disk covers and the short homology loop pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SyskitError
from .graph import WeightedGraph, betti_number, greedy_systolic_sequence
from .homology import (MeshLoop, _reduce_walk, insert_vector, make_loop, rank_z2,
                       shortest_loop_outside, tree_cotree_basis)
from .mesh import TriMesh
from .packing import disk_regularity_check, maximal_disk_packing
from .surgery import cut_mesh

C0_NUMERATOR = 2.0 ** 16
C_LAMBDA_NUMERATOR = 2.0 ** 18

CAPPING_NOTE = ("short loops are cut and capped with flat disks instead of glued fat tori; "
                "independence is certified by Z2 rank on the original mesh")


@dataclass(frozen=True)
class NerveGraph:
    graph: WeightedGraph
    centers: tuple
    paths: tuple            # mesh vertex path from centres[u] to centres[v] per edge
    path_lengths: tuple
    r0: float
    eps: float
    ell: float
    regular: bool


def normalization_scale(M: TriMesh) -> float:
    """Factor that rescales lengths to area 4 pi (g - 1); unit area when g = 1."""
    g = M.genus
    target = 4 * math.pi * (g - 1) if g >= 2 else 1.0
    return math.sqrt(target / M.area)


def build_nerve(M: TriMesh, ell: float, eps: float | None = None, steiner: int = 0,
                allow_irregular: bool = False) -> NerveGraph:
    """1-skeleton of the nerve of the enlarged disk cover, r0 = ell/16."""
    if not ell > 0:
        raise SyskitError("BAD_PARAMS", "ell must be positive")
    r0 = ell / 16.0
    eps = ell / 64.0 if eps is None else float(eps)
    if not eps > 0:
        raise SyskitError("BAD_PARAMS", "eps must be positive")
    if not 4 * r0 + 2 * eps < ell / 2:
        raise SyskitError("EPSILON_TOO_LARGE", f"4 r0 + 2 eps = {4 * r0 + 2 * eps} >= ell/2")
    reg = disk_regularity_check(M, r0)
    if not reg["passed"] and not allow_irregular:
        raise SyskitError("IRREGULAR_METRIC",
                          f"{len(reg['failures'])} vertices have r0-balls of area < r0^2/2")
    centers = maximal_disk_packing(M, r0, steiner=steiner)
    reach = 4 * r0 + 2 * eps
    dist, pred = M.dijkstra(centers, limit=reach * (1 + 1e-12))
    dist = np.atleast_2d(dist)
    pred = np.atleast_2d(pred)
    edges, paths, plens = [], [], []
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            d = dist[i, centers[j]]
            if d <= reach:
                path = [centers[j]]
                while path[-1] != centers[i]:
                    path.append(int(pred[i, path[-1]]))
                edges.append((i, j, ell / 2))
                paths.append(tuple(path[::-1]))
                plens.append(float(d))
    return NerveGraph(WeightedGraph(len(centers), tuple(edges)), tuple(centers), tuple(paths),
                      tuple(plens), r0, eps, ell, reg["passed"])


@dataclass(frozen=True)
class HomologyIso:
    graph: WeightedGraph      # Gamma_1, edges indexed locally
    nerve_edge: tuple         # local edge -> nerve edge id
    tree_edges: tuple         # nerve edge ids of the spanning forest
    chords: tuple             # kept nerve chord ids
    chord_classes: tuple
    rank: int


def _edge_class(M, tc, path):
    cls = 0
    for a, b in zip(path, path[1:]):
        cls ^= tc.labels[M.edge_index[(a, b) if a < b else (b, a)]]
    return cls


def minimize_to_homology_iso(N: NerveGraph, M: TriMesh) -> HomologyIso:
    """Drop nerve chords until the projection to H1(M; Z2) is an isomorphism."""
    tc = tree_cotree_basis(M)
    G = N.graph
    ecls = [_edge_class(M, tc, p) for p in N.paths]
    parent = list(range(G.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = sorted(range(G.n_edges), key=lambda e: (G.edges[e][2], e))
    tree, chords = [], []
    for e in order:
        u, v, _ = G.edges[e]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append(e)
        else:
            chords.append(e)
    adj = G.adjacency(tree)
    pot = [None] * G.n_vertices
    for s in range(G.n_vertices):
        if pot[s] is not None:
            continue
        pot[s] = 0
        stack = [s]
        while stack:
            x = stack.pop()
            for y, _, e in adj[x]:
                if pot[y] is None:
                    pot[y] = pot[x] ^ ecls[e]
                    stack.append(y)
    basis = {}
    kept, kept_cls = [], []
    for e in chords:
        u, v, _ = G.edges[e]
        c = pot[u] ^ pot[v] ^ ecls[e]
        if insert_vector(basis, c):
            kept.append(e)
            kept_cls.append(c)
    if len(kept) < tc.dim:
        raise SyskitError("NOT_EPIMORPHIC", f"nerve cycles reach rank {len(kept)} < 2g = {tc.dim}")
    local = sorted(tree + kept)
    sub = WeightedGraph(G.n_vertices, tuple(G.edges[e] for e in local))
    return HomologyIso(sub, tuple(local), tuple(sorted(tree)), tuple(kept), tuple(kept_cls), len(kept))


def _project_cycle(N, iso, cycle):
    """Concatenate stored mesh paths along a Gamma_1 cycle."""
    walk = []
    verts = list(cycle.vertices)
    for k, le in enumerate(cycle.edge_ids):
        ne = iso.nerve_edge[le]
        u, v, _ = N.graph.edges[ne]
        path = list(N.paths[ne])
        if verts[k] != u:
            path = path[::-1]
        walk.extend(path[:-1])
    return _reduce_walk(walk)


def theorem_bound(g, k, ell_normalized, c0=None):
    c0 = C0_NUMERATOR / min(1.0, ell_normalized) if c0 is None else c0
    return c0 * math.log(2 * g - k + 2) / (2 * g - k + 1) * g


def short_homology_loops(M: TriMesh, ell: float, count: int, eps: float | None = None,
                         steiner: int = 0, allow_irregular: bool = False, c0=None):
    """Nerve -> homology isomorphism -> greedy cycles -> projected mesh loops."""
    N = build_nerve(M, ell, eps, steiner, allow_irregular)
    iso = minimize_to_homology_iso(N, M)
    seq = greedy_systolic_sequence(iso.graph, count)
    g = M.genus
    scale = normalization_scale(M)
    loops = []
    for cyc, _ in seq:
        loops.append(make_loop(M, _project_cycle(N, iso, cyc)))
    rank = rank_z2(l.cls for l in loops)
    if rank != len(loops):
        raise SyskitError("RANK_DEFICIT", f"projected loops have rank {rank} < {len(loops)}")
    table = []
    for k, (lp, (cyc, _)) in enumerate(zip(loops, seq), start=1):
        bound = theorem_bound(g, k, ell * scale, c0)
        table.append({"k": k, "length": lp.length, "normalized_length": lp.length * scale,
                      "graph_cycle_length": cyc.length, "bound": bound,
                      "pass": lp.length * scale <= bound})
    return {
        "inputs": {"ell": ell, "count": count, "eps": N.eps, "r0": N.r0, "steiner": steiner,
                   "genus": g, "area": M.area, "normalization_scale": scale},
        "nerve": {"vertices": N.graph.n_vertices, "edges": N.graph.n_edges,
                  "gamma1_betti": betti_number(iso.graph), "regular": N.regular},
        "loops": [_loop_record(lp, k) for k, lp in enumerate(loops, start=1)],
        "rank": rank,
        "bounds": table,
        "anchor": "C0 log(2g-k+2)/(2g-k+1) g with C0 = 2^16/min(1, ell)",
        "deviations": ["bound constant is the published one and very loose",
                       "lengths compared after rescaling to area 4 pi (g-1) (unit area for g = 1)"]
        + ([] if N.regular else ["regularity check failed and was overridden"]),
        "_loops": loops,
    }


def _loop_record(lp: MeshLoop, k):
    return {"k": k, "vertices": list(lp.vertices), "length": lp.length,
            "class_bits": list(lp.class_bits)}


def short_independent_system(M: TriMesh, target: int, eps_cut: float, c_lambda=None):
    """Greedy short loops extending the Z2 rank, with cut-and-cap between picks.

    While the working surface still has genus, the next loop is the shortest
    homologically nontrivial loop of the working surface (cut open and capped
    along the previous picks).  Once it is a sphere the search continues on
    the original mesh among loops whose class leaves the current span.
    """
    tc = tree_cotree_basis(M)
    g = tc.genus
    if target < 1:
        raise SyskitError("BAD_PARAMS", "target must be >= 1")
    if target > 2 * g:
        raise SyskitError("TARGET_UNREACHABLE", f"target {target} > 2g = {2 * g}")
    W, vmap = M, list(range(M.n_vertices))
    banned_v = set()
    loops, tags = [], []
    basis = {}
    while len(loops) < target:
        found = None
        if W.genus > 0:
            cand = shortest_loop_outside(W, (), banned_v)
            if cand is not None:
                walk = [vmap[v] for v in cand.vertices]
                found = (make_loop(M, _reduce_walk(walk)), "cut-and-cap", cand)
        if found is None:
            cand = shortest_loop_outside(M, [basis[k] for k in basis])
            if cand is None:
                break
            found = (cand, "quotient-search", None)
        lp, how, wl = found
        if not insert_vector(basis, lp.cls):
            raise SyskitError("RANK_DEFICIT", "picked loop does not extend the rank")
        loops.append(lp)
        tags.append({"how": how, "short": lp.length < eps_cut})
        if wl is not None:
            s = cut_mesh(W, set(W.walk_edges(list(wl.vertices))))
            vmap = [vmap[p] if p >= 0 else -1 for p in s.vmap]
            # ring edges are copies of mesh edges; only the cap fans are foreign
            banned_v = {v for v, p in enumerate(vmap) if p < 0}
            W = s.mesh
    if len(loops) < target:
        raise SyskitError("TARGET_UNREACHABLE", f"rank saturated at {len(loops)} < {target}")
    lam = target / g
    area = M.area
    if lam < 1:
        c = C_LAMBDA_NUMERATOR / (1 - lam) if c_lambda is None else c_lambda
        bound = c * math.log(g + 1) / math.sqrt(g) * math.sqrt(area)
    else:
        bound = None
    return {
        "inputs": {"target": target, "eps_cut": eps_cut, "genus": g, "area": area, "lambda": lam},
        "loops": [dict(_loop_record(lp, k), **t) for k, (lp, t) in enumerate(zip(loops, tags), start=1)],
        "rank": rank_z2(l.cls for l in loops),
        "bounds": [{"k": k, "length": lp.length, "bound": bound,
                    "pass": None if bound is None else lp.length <= bound}
                   for k, lp in enumerate(loops, start=1)],
        "anchor": "C_lambda log(g+1)/sqrt(g) sqrt(area) with C_lambda = 2^18/(1-lambda)",
        "deviations": [CAPPING_NOTE],
        "_loops": loops,
    }


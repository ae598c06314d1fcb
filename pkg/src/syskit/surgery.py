"""Cutting a mesh along edge sets, capping boundary cycles, splitting components."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SyskitError
from .mesh import TriMesh, edge_key


@dataclass
class Surgery:
    mesh: TriMesh
    vmap: list          # new vertex -> parent vertex (-1 for cap centres)
    caps: list          # (centre, ring vertices, ring perimeter)
    boundary: list      # boundary cycles (vertex lists) before capping


def corner_sectors(M: TriMesh, cut_edges):
    """Group the corners around each vertex into sectors separated by cut edges.

    Returns ``(sector_of, n_sectors, owner)`` where ``sector_of[(f, v)]`` is the
    sector id of corner ``v`` of face ``f`` and ``owner[s]`` its vertex.
    """
    cut = set(cut_edges)
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f, tri in enumerate(M.faces):
        for v in tri:
            parent[(f, v)] = (f, v)
    for e, fs in enumerate(M.edge_faces):
        if e in cut or len(fs) != 2:
            continue
        f, g = fs
        for v in M.edges[e]:
            a, b = find((f, v)), find((g, v))
            if a != b:
                parent[a] = b
    sector_of = {}
    ids = {}
    owner = []
    for v in range(M.n_vertices):
        for f in M.vertex_faces[v]:
            root = find((f, v))
            if root not in ids:
                ids[root] = len(owner)
                owner.append(v)
            sector_of[(f, v)] = ids[root]
    return sector_of, len(owner), owner


def _trace_boundary(n_vertices, faces, edge_faces_count):
    """Oriented boundary cycles of a manifold-with-boundary face list."""
    nxt = {}
    for a, b, c in faces:
        for x, y in ((a, b), (b, c), (c, a)):
            if edge_faces_count[edge_key(x, y)] == 1:
                if x in nxt:
                    raise SyskitError("NONMANIFOLD", f"vertex {x} has two outgoing boundary edges")
                nxt[x] = y
    cycles = []
    seen = set()
    for s in sorted(nxt):
        if s in seen:
            continue
        cyc = [s]
        seen.add(s)
        x = nxt[s]
        while x != s:
            cyc.append(x)
            seen.add(x)
            x = nxt[x]
        cycles.append(cyc)
    return cycles


def cut_mesh(M: TriMesh, cut_edges, cap=True, data=None):
    """Cut ``M`` open along ``cut_edges`` and optionally cap each boundary cycle.

    Caps are flat fans: a new centre joined to every ring vertex with radial
    length ``perimeter / (2 pi)``, raised when needed so every fan triangle is
    strictly non-degenerate.  ``data`` maps names to per-vertex arrays that are
    carried over (cap centres get the ring mean).
    """
    sector_of, ns, owner = corner_sectors(M, cut_edges)
    faces = [tuple(sector_of[(f, v)] for v in tri) for f, tri in enumerate(M.faces)]
    elen = {}
    ecount = {}
    for f, tri in enumerate(M.faces):
        nf = faces[f]
        for k in range(3):
            a, b = nf[k], nf[(k + 1) % 3]
            key = edge_key(a, b)
            if key not in elen:
                elen[key] = M.lengths[M.edge_index[edge_key(tri[k], tri[(k + 1) % 3])]]
                ecount[key] = 0
            ecount[key] += 1
    boundary = _trace_boundary(ns, faces, ecount)
    vmap = list(owner)
    caps = []
    coords = None if M.coords is None else [M.coords[v] for v in owner]
    carried = {k: [np.asarray(arr)[v] for v in owner] for k, arr in (data or {}).items()}
    n = ns
    if cap:
        for ring in boundary:
            ring_len = [elen[edge_key(ring[i], ring[(i + 1) % len(ring)])] for i in range(len(ring))]
            per = math.fsum(ring_len)
            r = max(per / (2 * math.pi), 0.5 * max(ring_len) * (1 + 1e-6))
            c = n
            n += 1
            vmap.append(-1)
            for i, a in enumerate(ring):
                b = ring[(i + 1) % len(ring)]
                faces.append((b, a, c))
                elen[edge_key(a, c)] = r
            caps.append((c, list(ring), per))
            if coords is not None:
                coords.append(np.mean([coords[v] for v in ring], axis=0))
            for k in carried:
                carried[k].append(float(np.mean([carried[k][v] for v in ring])))
    keys = sorted(elen)
    marks = []
    for m in M.marked:
        for f in M.vertex_faces[m]:
            s = sector_of[(f, m)]
            if s not in marks:
                marks.append(s)
                break
    mesh = TriMesh(n, keys, [elen[k] for k in keys], faces, marks, coords, validate=False)
    out = Surgery(mesh, vmap, caps, boundary)
    out.data = {k: np.array(v) for k, v in carried.items()}
    return out


def split_components(M: TriMesh):
    """Connected components as ``(submesh, local->parent vertex list)``."""
    comp = [-1] * M.n_vertices
    order = []
    for s in range(M.n_vertices):
        if comp[s] >= 0:
            continue
        cid = len(order)
        order.append([])
        comp[s] = cid
        stack = [s]
        while stack:
            x = stack.pop()
            order[cid].append(x)
            for y, _ in M.neighbors[x]:
                if comp[y] < 0:
                    comp[y] = cid
                    stack.append(y)
    out = []
    for verts in order:
        verts.sort()
        local = {v: i for i, v in enumerate(verts)}
        faces = [tuple(local[v] for v in tri) for tri in M.faces if tri[0] in local]
        edges, lengths = [], []
        for i, (u, v) in enumerate(M.edges):
            if u in local:
                edges.append((local[u], local[v]))
                lengths.append(M.lengths[i])
        coords = None if M.coords is None else M.coords[verts]
        marks = [local[m] for m in M.marked if m in local]
        out.append((TriMesh(len(verts), edges, lengths, faces, marks, coords, validate=False), verts))
    return out


def component_stats(M: TriMesh, cut_edges, marks=None):
    """Topology of each piece of ``M`` cut open along ``cut_edges``.

    Each record has the Euler characteristic, boundary count, number of marks
    and genus of the piece, plus a type tag.
    """
    marks = M.marked if marks is None else marks
    cut = set(cut_edges)
    for m in marks:
        for _, e in M.neighbors[m]:
            if e in cut:
                raise SyskitError("BAD_LOOP", f"marked vertex {m} lies on a loop")
    s = cut_mesh(M.with_marks(marks), cut, cap=False)
    records = []
    for sub, _ in split_components(s.mesh):
        chi = sub.euler_characteristic
        nb = sub.n_boundary_cycles
        nm = len(sub.marked)
        genus = (2 - chi - nb) // 2
        records.append({"chi": chi, "boundaries": nb, "marks": nm, "genus": genus,
                        "faces": len(sub.faces), "type": classify(genus, nb, nm)})
    return records


def classify(genus, boundaries, marks):
    if genus != 0:
        return "other"
    holes = boundaries + marks
    return {0: "sphere", 1: "disk", 2: "cylinder", 3: "pants", 4: "four-holed-sphere"}.get(holes, "other")

"""Mesh refinement along curves: midpoint subdivision, level curves, curve insertion.

A curve is a closed polyline whose vertices lie in the interior of mesh
edges and whose segments are chords of faces.  Inserting a family of
disjoint curves produces a finer mesh in which every curve is an edge cycle,
so loops can be cut and validated combinatorially.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SyskitError
from .mesh import TriMesh, edge_key


@dataclass(frozen=True)
class Curve:
    points: tuple    # ((edge id, s), ...) with s the fraction from the lower endpoint
    faces: tuple     # faces[i] holds the segment points[i] -> points[i+1 mod n]


@dataclass
class Subdivision:
    mesh: TriMesh
    n_base: int
    edge_origin: list     # new edge -> base edge it lies on, or -1

    def midpoint(self, base_mesh, u, v):
        return self.n_base + base_mesh.edge_index[edge_key(u, v)]

    def lift_walk(self, base_mesh, walk):
        out = []
        n = len(walk)
        for i in range(n):
            u, v = walk[i], walk[(i + 1) % n]
            out += [u, self.midpoint(base_mesh, u, v)]
        return out


def subdivide_midpoints(M: TriMesh) -> Subdivision:
    """Split every face into four similar halves; edge e gets vertex n + e."""
    n = M.n_vertices
    faces = []
    for tri in M.faces:
        a, b, c = tri
        mab = n + M.edge_index[edge_key(a, b)]
        mbc = n + M.edge_index[edge_key(b, c)]
        mca = n + M.edge_index[edge_key(c, a)]
        faces += [(a, mab, mca), (b, mbc, mab), (c, mca, mbc), (mab, mbc, mca)]
    lengths = {}
    origin = {}
    for e, (u, v) in enumerate(M.edges):
        m = n + e
        for x in (u, v):
            lengths[edge_key(x, m)] = M.lengths[e] / 2
            origin[edge_key(x, m)] = e
    for tri in M.faces:
        a, b, c = tri
        w = {k: M.lengths[M.edge_index[k]] for k in (edge_key(a, b), edge_key(b, c), edge_key(c, a))}
        mab, mbc, mca = (n + M.edge_index[edge_key(x, y)] for x, y in ((a, b), (b, c), (c, a)))
        # a midline is half the side it is parallel to
        for k1, k2, side in ((mab, mbc, edge_key(c, a)), (mbc, mca, edge_key(a, b)), (mca, mab, edge_key(b, c))):
            lengths[edge_key(k1, k2)] = w[side] / 2
            origin[edge_key(k1, k2)] = -1
    keys = sorted(lengths)
    coords = None
    if M.coords is not None:
        C = np.asarray(M.coords, float)
        coords = np.vstack([C, np.array([(C[u] + C[v]) / 2 for u, v in M.edges]).reshape(-1, C.shape[1])])
    sub = TriMesh(n + M.n_edges, keys, [lengths[k] for k in keys], faces, M.marked, coords, validate=False)
    return Subdivision(sub, n, [origin[k] for k in keys])


def level_curves(M: TriMesh, phi, t: float, faces=None):
    """Components of {phi = t} for a PL function given at vertices (t not a vertex value).

    ``faces`` may restrict the scan to a face set known to contain the level set.
    """
    phi = np.asarray(phi, float)
    below = phi < t
    pts = {}
    links = {}
    for f in (range(len(M.faces)) if faces is None else faces):
        tri = M.faces[f]
        b = [bool(below[v]) for v in tri]
        if all(b) or not any(b):
            continue
        ends = []
        for k in range(3):
            u, v = tri[k], tri[(k + 1) % 3]
            if b[k] != b[(k + 1) % 3]:
                e = M.edge_index[edge_key(u, v)]
                if e not in pts:
                    lo, hi = M.edges[e]
                    pts[e] = (t - phi[lo]) / (phi[hi] - phi[lo])
                ends.append(e)
        p, q = ends
        links.setdefault(p, []).append((f, q))
        links.setdefault(q, []).append((f, p))
    curves = []
    seen = set()
    for start in sorted(links):
        if start in seen:
            continue
        pts_seq, faces_seq = [start], []
        seen.add(start)
        prev_face = None
        cur = start
        while True:
            options = [(f, q) for f, q in links[cur] if f != prev_face]
            f, q = options[0]
            faces_seq.append(f)
            if q == start:
                break
            seen.add(q)
            pts_seq.append(q)
            prev_face, cur = f, q
        curves.append(Curve(tuple((e, float(pts[e])) for e in pts_seq), tuple(faces_seq)))
    return curves


def curve_length(M: TriMesh, curve: Curve) -> float:
    total = 0.0
    n = len(curve.points)
    for i in range(n):
        f = curve.faces[i]
        P = _face_positions(M, f)
        a = _point_xy(M, f, P, curve.points[i])
        b = _point_xy(M, f, P, curve.points[(i + 1) % n])
        total += float(np.hypot(*(a - b)))
    return total


def _face_positions(M, f):
    return M.face_flat(f)


def _point_xy(M, f, P, point):
    e, s = point
    lo, hi = M.edges[e]
    tri = M.faces[f]
    i, j = tri.index(lo), tri.index(hi)
    return P[i] + s * (P[j] - P[i])


@dataclass
class Insertion:
    mesh: TriMesh
    loops: list           # inserted curves as vertex cycles
    edge_origin: list     # new edge -> base edge it lies on, or -1
    splits: dict          # base edge -> [(s, vertex)] sorted by s

    def expand_walk(self, base: TriMesh, walk):
        """Re-express a vertex cycle of the base mesh in the refined mesh."""
        out = []
        n = len(walk)
        for i in range(n):
            u, v = walk[i], walk[(i + 1) % n]
            out.append(u)
            e = base.edge_index[edge_key(u, v)]
            inner = self.splits.get(e, [])
            seq = [x for _, x in inner]
            out += seq if u < v else seq[::-1]
        return out


def insert_curves(M: TriMesh, curves) -> Insertion:
    """Refine ``M`` so every curve becomes an edge cycle.

    Faces are cut along the chords (which never cross) into convex pieces;
    pieces with more than three corners are fanned from their centroid.
    """
    keys = sorted({p for c in curves for p in c.points})
    n0 = M.n_vertices
    pid = {k: n0 + i for i, k in enumerate(keys)}
    splits = {}
    for (e, s) in keys:
        splits.setdefault(e, []).append((s, pid[(e, s)]))
    for e in splits:
        splits[e].sort()
    chords = {}
    for c in curves:
        m = len(c.points)
        for i in range(m):
            chords.setdefault(c.faces[i], []).append((pid[c.points[i]], pid[c.points[(i + 1) % m]]))
    coords3 = None if M.coords is None else [np.asarray(x, float) for x in M.coords]
    if coords3 is not None:
        for (e, s) in keys:
            lo, hi = M.edges[e]
            coords3.append((1 - s) * coords3[lo] + s * coords3[hi])
    n_total = n0 + len(keys)
    new_faces = []
    lengths = {}
    origin = {}
    for f, tri in enumerate(M.faces):
        fc = chords.get(f)
        if not fc:
            new_faces.append(tri)
            continue
        P = M.face_flat(f)
        pos = {tri[k]: P[k] for k in range(3)}
        ring = []
        side_of = {}
        for k in range(3):
            u, v = tri[k], tri[(k + 1) % 3]
            e = M.edge_index[edge_key(u, v)]
            inner = splits.get(e, [])
            seq = inner if u < v else [(1 - s, x) for s, x in reversed(inner)]
            ring.append(u)
            for s, x in seq:
                pos[x] = P[k] + s * (P[(k + 1) % 3] - P[k])
                ring.append(x)
            chain = [u] + [x for _, x in seq] + [v]
            for a, b in zip(chain, chain[1:]):
                side_of[edge_key(a, b)] = e
        regions = [ring]
        for p, q in fc:
            for r_i, reg in enumerate(regions):
                if p in reg and q in reg:
                    i, j = reg.index(p), reg.index(q)
                    if i > j:
                        i, j = j, i
                    regions[r_i:r_i + 1] = [reg[i:j + 1], reg[j:] + reg[:i + 1]]
                    break
            else:  # pragma: no cover
                raise SyskitError("BAD_LOOP", f"crossing curves in face {f}")
        for reg in regions:
            if len(reg) == 3:
                tris = [tuple(reg)]
            else:
                cxy = np.mean([pos[x] for x in reg], axis=0)
                c = n_total
                n_total += 1
                pos[c] = cxy
                if coords3 is not None:
                    coords3.append(np.mean([coords3[x] for x in reg], axis=0))
                tris = [(c, reg[i], reg[(i + 1) % len(reg)]) for i in range(len(reg))]
            for t3 in tris:
                new_faces.append(t3)
                for a, b in ((t3[0], t3[1]), (t3[1], t3[2]), (t3[2], t3[0])):
                    k = edge_key(a, b)
                    if k in lengths:
                        continue
                    base = side_of.get(k)
                    if base is not None:
                        lengths[k] = None  # filled from the base edge below
                        origin[k] = base
                    else:
                        lengths[k] = float(np.hypot(*(pos[a] - pos[b])))
                        origin[k] = -1
    for tri in new_faces:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            k = edge_key(a, b)
            if k not in lengths:
                e = M.edge_index.get(k)
                lengths[k] = M.lengths[e]
                origin[k] = e
    # pieces of split base edges: length from the edge parameter
    for e, inner in splits.items():
        lo, hi = M.edges[e]
        chain = [(0.0, lo)] + inner + [(1.0, hi)]
        for (s1, a), (s2, b) in zip(chain, chain[1:]):
            lengths[edge_key(a, b)] = (s2 - s1) * M.lengths[e]
            origin[edge_key(a, b)] = e
    for k, w in lengths.items():
        if w is None:
            e = origin[k]
            lengths[k] = M.lengths[e]
    ekeys = sorted(lengths)
    coords = None if coords3 is None else np.array(coords3)
    # orientation is inherited; slivers from near-vertex crossings are kept as is
    Z = TriMesh(n_total, ekeys, [lengths[k] for k in ekeys], new_faces, M.marked, coords, validate=False)
    loops = [[pid[p] for p in c.points] for c in curves]
    return Insertion(Z, loops, [origin[k] for k in ekeys], splits)

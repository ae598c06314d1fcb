"""Disk packings, Voronoi partitions and the disk-area regularity check."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import SyskitError
from .mesh import TriMesh, geodesic_distance


def maximal_disk_packing(M: TriMesh, r0: float, seeds=(), steiner: int = 0, order: str = "farthest"):
    """Greedy maximal packing of disjoint r0-disks.

    Seeds are accepted first.  With ``order="farthest"`` the remaining vertices
    are visited in farthest-point order (farthest from the accepted set, lowest
    id on ties) and accepted while their distance to every centre is at least
    ``2 r0``.  ``order="index"`` scans vertex ids in increasing order instead.
    """
    if order not in ("farthest", "index"):
        raise SyskitError("BAD_PARAMS", f"unknown scan order {order!r}")
    if r0 <= 0:
        raise SyskitError("BAD_PARAMS", "r0 must be positive")
    seeds = [int(s) for s in seeds]
    centers = []
    dmin = np.full(M.n_vertices, np.inf)
    for s in seeds:
        if dmin[s] < 2 * r0:
            raise SyskitError("SEEDS_TOO_CLOSE", f"seed {s} is within 2*r0 of another seed")
        centers.append(s)
        dmin = np.minimum(dmin, geodesic_distance(M, s, steiner))
    if order == "index":
        for v in range(M.n_vertices):
            if dmin[v] >= 2 * r0:
                centers.append(v)
                dmin = np.minimum(dmin, geodesic_distance(M, v, steiner))
        return centers
    if not centers:
        centers.append(0)
        dmin = geodesic_distance(M, 0, steiner)
    while True:
        nxt = int(np.argmax(dmin))
        if not dmin[nxt] >= 2 * r0:
            break
        centers.append(nxt)
        dmin = np.minimum(dmin, geodesic_distance(M, nxt, steiner))
    return centers


@dataclass(frozen=True)
class VoronoiPartition:
    centers: tuple
    owner: tuple        # owner[v] = index into centers
    dist: tuple         # distance from v to its owner
    pred: tuple         # predecessor on a shortest path inside the cell
    cells: tuple        # vertex lists per centre
    interfaces: dict    # (i, j) with i < j -> edge ids joining the two cells

    def adjacent_pairs(self):
        return sorted(self.interfaces)


def voronoi_cells(M: TriMesh, centers) -> VoronoiPartition:
    """Multi-source Dijkstra; a vertex goes to the nearest centre, lower index on ties."""
    centers = [int(c) for c in centers]
    if not centers:
        raise SyskitError("BAD_PARAMS", "need at least one centre")
    key = [(math.inf, math.inf)] * M.n_vertices
    pred = [-1] * M.n_vertices
    heap = []
    for i, c in enumerate(centers):
        if (0.0, i) < key[c]:
            key[c] = (0.0, i)
            heapq.heappush(heap, (0.0, i, c))
    done = [False] * M.n_vertices
    while heap:
        d, i, x = heapq.heappop(heap)
        if done[x] or (d, i) != key[x]:
            continue
        done[x] = True
        for y, e in M.neighbors[x]:
            cand = (d + M.lengths[e], i)
            if cand < key[y]:
                key[y] = cand
                pred[y] = x
                heapq.heappush(heap, (cand[0], i, y))
    owner = tuple(k[1] for k in key)
    cells = [[] for _ in centers]
    for v, o in enumerate(owner):
        cells[o].append(v)
    inter = {}
    for e, (u, v) in enumerate(M.edges):
        a, b = owner[u], owner[v]
        if a != b:
            inter.setdefault((min(a, b), max(a, b)), []).append(e)
    return VoronoiPartition(tuple(centers), owner, tuple(k[0] for k in key), tuple(pred),
                            tuple(tuple(c) for c in cells), {k: tuple(v) for k, v in inter.items()})


def _subgrid(m):
    """Barycentric centroids of the m*m sub-triangles of a triangle."""
    pts = []
    for i in range(m):
        for j in range(m - i):
            pts.append(((i + 1 / 3) / m, (j + 1 / 3) / m))
            if i + j < m - 1:
                pts.append(((i + 2 / 3) / m, (j + 2 / 3) / m))
    b = np.array(pts)
    return np.column_stack([1 - b[:, 0] - b[:, 1], b[:, 0], b[:, 1]])


_GRID = _subgrid(10)


def ball_area(M: TriMesh, v: int, R: float, dist=None):
    """Area of {x : d(v, x) <= R} with distances continued straight across faces."""
    if R <= 0:
        return 0.0
    if dist is None:
        dist, _ = M.dijkstra(v, limit=R)
    total = 0.0
    near = {f for x in np.nonzero(dist < R)[0] for f in M.vertex_faces[int(x)]}
    for f in sorted(near):
        P = M.face_flat(f)
        pts = _GRID @ P
        dv = np.array([dist[x] for x in M.faces[f]])
        d = np.min(dv[None, :] + np.linalg.norm(pts[:, None, :] - P[None, :, :], axis=2), axis=1)
        total += M.face_areas[f] * float(np.mean(d <= R))
    return total


def disk_regularity_check(M: TriMesh, R: float):
    """Compare the area of every distance-R ball with R^2/2 (check only)."""
    threshold = R * R / 2
    rows = []
    if R > 0:
        graph = M.csr()
        from scipy.sparse.csgraph import dijkstra

        limit = R + max(M.lengths)
        for start in range(0, M.n_vertices, 256):
            idx = list(range(start, min(start + 256, M.n_vertices)))
            D = dijkstra(graph, directed=False, indices=idx, limit=limit)
            for k, v in enumerate(idx):
                a = ball_area(M, v, R, D[k])
                rows.append((v, a, a >= threshold))
    else:
        rows = [(v, 0.0, True) for v in range(M.n_vertices)]
    failures = [v for v, _, ok in rows if not ok]
    return {"R": R, "threshold": threshold, "passed": not failures, "failures": failures,
            "min_area": min((a for _, a, _ in rows), default=0.0), "areas": [a for _, a, _ in rows]}

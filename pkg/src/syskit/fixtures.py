"""Fixture meshes: flat tori, icospheres, tori with handles, marked spheres."""
from __future__ import annotations

import math

import numpy as np

from .errors import SyskitError
from .mesh import TriMesh, edge_key


def _assemble(n_vertices, faces, length_of, coords=None, marked=()):
    edges = sorted({edge_key(a, b) for tri in faces for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))})
    lengths = [length_of(u, v) for u, v in edges]
    return TriMesh(n_vertices, edges, lengths, faces, marked, coords)


def _torus_faces(n, skip=()):
    def vid(i, j):
        return (j % n) * n + (i % n)

    faces = []
    for j in range(n):
        for i in range(n):
            if (i, j) in skip:
                continue
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [(a, b, c), (a, c, d)]
    return faces, vid


def _torus_coords(n):
    R, r = n / (2 * math.pi), n / (5 * math.pi)
    out = np.zeros((n * n, 3))
    for j in range(n):
        for i in range(n):
            th, ph = 2 * math.pi * i / n, 2 * math.pi * j / n
            out[j * n + i] = ((R + r * math.cos(ph)) * math.cos(th), r * math.sin(ph),
                              (R + r * math.cos(ph)) * math.sin(th))
    return out


def flat_torus(n: int, spacing: float = 1.0) -> TriMesh:
    """Square n x n flat torus grid with one diagonal per square.

    Edge lengths are intrinsic (``spacing`` and ``spacing*sqrt 2``); the
    coordinates are a torus of revolution standing on its side and are only
    used as a height function.
    """
    if n < 3:
        raise SyskitError("BAD_PARAMS", "flat torus needs n >= 3")
    faces, _ = _torus_faces(n)
    diag = spacing * math.sqrt(2.0)

    def length(u, v):
        du = abs(u % n - v % n)
        dv = abs(u // n - v // n)
        return diag if (du not in (0,) and dv not in (0,)) else spacing

    return _assemble(n * n, faces, length, _torus_coords(n))


def _torus_with_tubes(n, holes, girth, segments=8, step=1.0):
    """Flat unit torus with tubes joining pairs of removed grid squares."""
    skip = {sq for pair in holes for sq in pair}
    faces, vid = _torus_faces(n, skip)
    coords = list(_torus_coords(n))
    lengths = {}
    for tri in faces:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            du, dv = abs(a % n - b % n), abs(a // n - b // n)
            lengths[edge_key(a, b)] = math.sqrt(2.0) if (du and dv) else 1.0
    nv = n * n
    waist = girth / 4.0
    for (sa, sb) in holes:
        ring_a = [vid(sa[0], sa[1]), vid(sa[0] + 1, sa[1]), vid(sa[0] + 1, sa[1] + 1), vid(sa[0], sa[1] + 1)]
        ring_b = [vid(sb[0], sb[1]), vid(sb[0] + 1, sb[1]), vid(sb[0] + 1, sb[1] + 1), vid(sb[0], sb[1] + 1)]
        best = None
        for rb in (ring_b, [ring_b[0]] + ring_b[:0:-1]):
            # square ends of side 1, one ramp ring, then a plateau at the waist
            sides = [1.0] + [(1.0 + waist) / 2] + [waist] * (segments - 3) + [(1.0 + waist) / 2] + [1.0]
            rings = [ring_a]
            new_coords = []
            ca = np.mean([coords[v] for v in ring_a], axis=0)
            cb = np.mean([coords[v] for v in rb], axis=0)
            k = nv
            for i in range(1, segments):
                t = i / segments
                ring = list(range(k, k + 4))
                k += 4
                rings.append(ring)
                centre = (1 - t) * ca + t * cb + np.array([0.0, n / 3.0 * math.sin(math.pi * t), 0.0])
                for j in range(4):
                    ang = math.pi / 4 + j * math.pi / 2
                    off = sides[i] / math.sqrt(2) * np.array([math.cos(ang), 0.0, math.sin(ang)])
                    new_coords.append(centre + off)
            rings.append(rb)
            tfaces = []
            tlen = {}

            def model(i, j):
                ang = math.pi / 4 + j * math.pi / 2
                rad = sides[i] / math.sqrt(2)
                return np.array([rad * math.cos(ang), rad * math.sin(ang), i * step])

            for i in range(segments):
                for j in range(4):
                    a, b = rings[i][j], rings[i][(j + 1) % 4]
                    c, d = rings[i + 1][(j + 1) % 4], rings[i + 1][j]
                    tfaces += [(a, b, c), (a, c, d)]
                    tlen[edge_key(a, b)] = sides[i]
                    tlen[edge_key(c, d)] = sides[i + 1]
                    tlen[edge_key(a, d)] = float(np.linalg.norm(model(i, j) - model(i + 1, j)))
                    tlen[edge_key(a, c)] = float(np.linalg.norm(model(i, j) - model(i + 1, (j + 1) % 4)))
            all_faces = faces + tfaces
            merged = dict(lengths)
            for key, w in tlen.items():
                merged.setdefault(key, w)
            try:
                edges = sorted(merged)
                used = {edge_key(x, y) for tri in all_faces for x, y in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))}
                edges = [e for e in edges if e in used]
                cand = TriMesh(k, edges, [merged[e] for e in edges], all_faces,
                               coords=np.array(coords + new_coords))
            except SyskitError:
                continue
            best = (k, all_faces, merged, coords + new_coords)
            break
        if best is None:  # pragma: no cover
            raise SyskitError("BAD_PARAMS", "could not glue an orientable tube")
        nv, faces, lengths, coords = best
    edges = sorted({edge_key(x, y) for tri in faces for x, y in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))})
    return TriMesh(nv, edges, [lengths[e] for e in edges], faces, coords=np.array(coords))


def genus2(n: int = 8, girth: float = 4.0) -> TriMesh:
    """Flat n x n torus plus one square tube handle of the given waist girth."""
    if n < 8:
        raise SyskitError("BAD_PARAMS", "genus2 fixture needs n >= 8")
    return _torus_with_tubes(n, [((1, 1), (n // 2 + 1, n // 2))], girth)


def pinched_genus2(w: float, n: int = 8) -> TriMesh:
    """Genus-2 fixture whose handle waist has circumference ``w``."""
    if not 0 < w <= 4:
        raise SyskitError("BAD_PARAMS", "pinch girth must be in (0, 4]")
    return genus2(n, girth=w)


def hairy_torus(n_hairs: int, girth: float, n: int | None = None) -> TriMesh:
    """Flat torus with ``n_hairs`` thin tube handles; genus 1 + n_hairs."""
    if n_hairs < 0 or not 0 < girth <= 4:
        raise SyskitError("BAD_PARAMS", "need n_hairs >= 0 and girth in (0, 4]")
    cols = max(1, math.ceil(math.sqrt(n_hairs)))
    n = n or max(8, 3 * 2 * cols + 2)
    squares = [(1 + 3 * a, 1 + 3 * b) for b in range(2 * cols) for a in range(cols * 2)]
    squares = [(x, y) for x, y in squares if x + 1 < n - 1 and y + 1 < n - 1]
    if len(squares) < 2 * n_hairs:
        raise SyskitError("BAD_PARAMS", "torus too small for that many hairs")
    holes = [(squares[2 * i], squares[2 * i + 1]) for i in range(n_hairs)]
    if not holes:
        return flat_torus(n)
    return _torus_with_tubes(n, holes, girth)


def icosphere(k: int = 0, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron on a sphere of ``radius``; chord edge lengths."""
    if k < 0:
        raise SyskitError("BAD_PARAMS", "subdivision level must be >= 0")
    t = (1 + 5 ** 0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(k):
        cache = {}

        def mid(a, b):
            key = edge_key(a, b)
            if key not in cache:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    P = np.array(verts) * radius
    return _assemble(len(P), faces, lambda u, v: float(np.linalg.norm(P[u] - P[v])), P)


def farthest_point_marks(M: TriMesh, n: int, start: int = 0):
    """Deterministic farthest-point sample of ``n`` vertices."""
    marks = [start]
    dmin, _ = M.dijkstra(start)
    while len(marks) < n:
        nxt = int(np.argmax(dmin))
        marks.append(nxt)
        d, _ = M.dijkstra(nxt)
        dmin = np.minimum(dmin, d)
    return marks


def marked_sphere(n: int, k: int | None = None, area: float | None = None) -> TriMesh:
    """Icosphere with ``n`` farthest-point marks; ``area`` rescales the metric."""
    if n < 1:
        raise SyskitError("BAD_PARAMS", "need at least one mark")
    if k is None:
        k = 2 if n <= 8 else 3 if n <= 32 else 4
    S = icosphere(k)
    if area is not None:
        S = S.scaled(math.sqrt(area / S.area))
    return S.with_marks(farthest_point_marks(S, n))



def branch_cocycle(S: TriMesh, marks=None):
    """Mod-2 sum of shortest edge paths pairing marks (0,1), (2,3), ... avoiding the others."""
    marks = list(S.marked if marks is None else marks)
    if len(marks) % 2:
        raise SyskitError("BAD_PARAMS", "need an even number of marks")
    labels = set()
    for i in range(0, len(marks), 2):
        a, b = marks[i], marks[i + 1]
        others = [m for m in marks if m not in (a, b)]
        _, path = S.shortest_path(a, b, banned_vertices=others)
        if path is None:
            raise SyskitError("BAD_PARAMS", f"marks {a} and {b} cannot be joined")
        for x, y in zip(path, path[1:]):
            labels ^= {S.edge_index[edge_key(x, y)]}
    return sorted(labels)


def hyperelliptic_sphere(g: int, k: int | None = None):
    """Sphere with 2g+2 marks and its branch cocycle; returns (mesh, edge ids)."""
    if g < 1:
        raise SyskitError("BAD_PARAMS", "need g >= 1")
    S = marked_sphere(2 * g + 2, k)
    return S, branch_cocycle(S)


def jitter_lengths(M: TriMesh, amount: float, seed: int = 0, tries: int = 50) -> TriMesh:
    """Multiply every edge length by an independent factor in [1 - amount, 1 + amount].

    Draws that break a triangle inequality are redrawn with the same generator.
    """
    if not 0 <= amount < 1:
        raise SyskitError("BAD_PARAMS", "jitter amount must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    base = np.asarray(M.lengths)
    for _ in range(tries):
        w = base * rng.uniform(1 - amount, 1 + amount, size=base.size)
        try:
            return TriMesh(M.n_vertices, M.edges, w, M.faces, M.marked, M.coords)
        except SyskitError as exc:
            if exc.code != "TRIANGLE_INEQUALITY":
                raise
    raise SyskitError("BAD_PARAMS", "could not draw admissible jittered lengths")

"""Triangulated piecewise-flat surfaces defined by edge lengths."""
from __future__ import annotations

import math
from collections import deque
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _cs_dijkstra

from .errors import SyskitError


def heron_area(a, b, c):
    """Triangle area from side lengths (Kahan's stable ordering)."""
    a, b, c = sorted((a, b, c), reverse=True)
    p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(p, 0.0))


def flatten_triangle(a, b, c):
    """Planar positions of a face with sides |p0p1| = c, |p1p2| = a, |p0p2| = b."""
    x = (b * b + c * c - a * a) / (2 * c)
    y = math.sqrt(max(b * b - x * x, 0.0))
    return np.array([[0.0, 0.0], [c, 0.0], [x, y]])


def edge_key(u, v):
    return (u, v) if u < v else (v, u)


class TriMesh:
    """A triangulated surface with metric edge lengths.

    The object is treated as immutable once built; derived tables are cached.
    Faces are stored consistently oriented (construction flips faces when it
    has to, and fails with NONORIENTABLE when it cannot).
    """

    def __init__(self, n_vertices, edges, lengths, faces, marked=(), coords=None,
                 length_text=None, validate=True):
        self.n_vertices = int(n_vertices)
        self.edges = tuple(edge_key(int(u), int(v)) for u, v in edges)
        self.lengths = tuple(float(w) for w in lengths)
        self.length_text = tuple(length_text) if length_text is not None else None
        self.faces = tuple(tuple(int(x) for x in f) for f in faces)
        self.marked = tuple(int(m) for m in marked)
        if coords is not None:
            coords = np.array(coords, dtype=float).reshape(self.n_vertices, 3)
            coords.setflags(write=False)
        self.coords = coords
        self.edge_index = {}
        for i, e in enumerate(self.edges):
            if e[0] == e[1] or e in self.edge_index:
                raise SyskitError("NONMANIFOLD", f"edge {i} {e} is a loop or duplicate")
            self.edge_index[e] = i
        if len(self.lengths) != len(self.edges):
            raise SyskitError("PARSE", "edge/length count mismatch")
        fe = []
        for fi, (a, b, c) in enumerate(self.faces):
            try:
                fe.append((self.edge_index[edge_key(b, c)], self.edge_index[edge_key(c, a)],
                           self.edge_index[edge_key(a, b)]))
            except KeyError:
                raise SyskitError("PARSE", f"face {fi} uses an edge that is not listed") from None
        # face_edges[f][k] is the edge opposite to corner k
        self.face_edges = tuple(fe)
        if validate:
            self._validate()

    # ------------------------------------------------------------------ checks
    def _validate(self):
        for w in self.lengths:
            if not (w > 0 and math.isfinite(w)):
                raise SyskitError("PARSE", f"non-positive edge length {w!r}")
        for fi, es in enumerate(self.face_edges):
            a, b, c = (self.lengths[e] for e in es)
            if not (a < b + c and b < a + c and c < a + b):
                raise SyskitError("TRIANGLE_INEQUALITY", f"face {fi} has sides {a}, {b}, {c}")
        for m in self.marked:
            if not 0 <= m < self.n_vertices:
                raise SyskitError("PARSE", f"marked vertex {m} out of range")
        counts = [len(fs) for fs in self.edge_faces]
        for i, k in enumerate(counts):
            if k not in (1, 2):
                raise SyskitError("NONMANIFOLD", f"edge {i} borders {k} faces")
        for v in range(self.n_vertices):
            if not self._fan_connected(v):
                raise SyskitError("NONMANIFOLD", f"vertex {v} is not a manifold point")
        self._orient()

    def _fan_connected(self, v):
        fs = self.vertex_faces[v]
        if not fs:
            return False
        fset = set(fs)
        seen = {fs[0]}
        stack = [fs[0]]
        while stack:
            f = stack.pop()
            for k in range(3):
                if self.faces[f][k] == v:
                    continue
                # edges of f through v are the ones opposite the other corners
                e = self.face_edges[f][k]
                for g in self.edge_faces[e]:
                    if g in fset and g not in seen:
                        seen.add(g)
                        stack.append(g)
        return len(seen) == len(fs)

    def _orient(self):
        faces = [list(f) for f in self.faces]
        state = [None] * len(faces)

        def directed(f, flip):
            a, b, c = faces[f]
            if flip:
                a, b = b, a
            return {(a, b), (b, c), (c, a)}

        for start in range(len(faces)):
            if state[start] is not None:
                continue
            state[start] = False
            queue = deque([start])
            while queue:
                f = queue.popleft()
                df = directed(f, state[f])
                for e in self.face_edges[f]:
                    for g in self.edge_faces[e]:
                        if g == f:
                            continue
                        u, v = self.edges[e]
                        # f traverses the edge one way; g must use the other way
                        f_uv = (u, v) in df
                        for flip in (False, True):
                            dg = directed(g, flip)
                            if ((u, v) in dg) != f_uv:
                                want = flip
                                break
                        else:  # pragma: no cover
                            raise SyskitError("NONORIENTABLE", "degenerate face")
                        if state[g] is None:
                            state[g] = want
                            queue.append(g)
                        elif state[g] != want:
                            raise SyskitError("NONORIENTABLE", f"faces {f} and {g} disagree")
        if any(state):
            new_faces = []
            for f, flip in zip(faces, state):
                new_faces.append((f[1], f[0], f[2]) if flip else tuple(f))
            self.faces = tuple(new_faces)
            self.face_edges = tuple(
                (self.edge_index[edge_key(b, c)], self.edge_index[edge_key(c, a)],
                 self.edge_index[edge_key(a, b)]) for a, b, c in self.faces)

    # ----------------------------------------------------------------- tables
    @cached_property
    def edge_faces(self):
        out = [[] for _ in self.edges]
        for f, es in enumerate(self.face_edges):
            for e in es:
                out[e].append(f)
        return tuple(tuple(x) for x in out)

    @cached_property
    def vertex_faces(self):
        out = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.faces):
            for v in tri:
                out[v].append(f)
        return tuple(tuple(x) for x in out)

    @cached_property
    def neighbors(self):
        out = [[] for _ in range(self.n_vertices)]
        for i, (u, v) in enumerate(self.edges):
            out[u].append((v, i))
            out[v].append((u, i))
        return tuple(tuple(sorted(x)) for x in out)

    @cached_property
    def boundary_edges(self):
        return tuple(i for i, fs in enumerate(self.edge_faces) if len(fs) == 1)

    @cached_property
    def face_areas(self):
        return np.array([heron_area(*(self.lengths[e] for e in es)) for es in self.face_edges])

    @property
    def area(self):
        return math.fsum(self.face_areas)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + len(self.faces)

    @cached_property
    def n_boundary_cycles(self):
        bset = set(self.boundary_edges)
        if not bset:
            return 0
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in bset:
            u, v = self.edges[e]
            parent[find(u)] = find(v)
        return len({find(self.edges[e][0]) for e in bset})

    @cached_property
    def n_components(self):
        seen = [False] * self.n_vertices
        count = 0
        for s in range(self.n_vertices):
            if seen[s]:
                continue
            count += 1
            seen[s] = True
            stack = [s]
            while stack:
                x = stack.pop()
                for y, _ in self.neighbors[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
        return count

    @property
    def genus(self):
        """Total genus (2c - chi - #boundary)/2, summed over components."""
        return (2 * self.n_components - self.euler_characteristic - self.n_boundary_cycles) // 2

    @property
    def is_closed(self):
        return not self.boundary_edges

    def length_of_walk(self, walk):
        return math.fsum(self.lengths[self.edge_index[edge_key(a, b)]]
                         for a, b in zip(walk, walk[1:] + walk[:1]))

    def walk_edges(self, walk):
        """Edge ids of a closed vertex walk; NOT_A_LOOP if a step is not an edge."""
        out = []
        n = len(walk)
        if n < 2:
            raise SyskitError("NOT_A_LOOP", "a loop needs at least two vertices")
        for k in range(n):
            e = self.edge_index.get(edge_key(walk[k], walk[(k + 1) % n]))
            if e is None:
                raise SyskitError("NOT_A_LOOP", f"{walk[k]}-{walk[(k + 1) % n]} is not an edge")
            out.append(e)
        return out

    def face_flat(self, f):
        """Planar coordinates of face ``f``'s corners in stored order."""
        e0, e1, e2 = self.face_edges[f]
        return flatten_triangle(self.lengths[e0], self.lengths[e1], self.lengths[e2])

    # -------------------------------------------------------------- distances
    def csr(self, banned_vertices=(), banned_edges=()):
        bv = set(banned_vertices)
        be = set(banned_edges)
        rows, cols, vals = [], [], []
        for i, (u, v) in enumerate(self.edges):
            if i in be or u in bv or v in bv:
                continue
            rows += [u, v]
            cols += [v, u]
            vals += [self.lengths[i]] * 2
        return csr_matrix((vals, (rows, cols)), shape=(self.n_vertices, self.n_vertices))

    def dijkstra(self, sources, banned_vertices=(), banned_edges=(), min_only=False, limit=np.inf):
        graph = self.csr(banned_vertices, banned_edges)
        if min_only:
            return _cs_dijkstra(graph, directed=False, indices=list(sources), min_only=True,
                                return_predecessors=True, limit=limit)
        return _cs_dijkstra(graph, directed=False, indices=sources, return_predecessors=True,
                            limit=limit)

    def shortest_path(self, src, dst, banned_vertices=(), banned_edges=()):
        dist, pred = self.dijkstra(src, banned_vertices, banned_edges)
        if not np.isfinite(dist[dst]):
            return math.inf, None
        path = [dst]
        while path[-1] != src:
            path.append(int(pred[path[-1]]))
        return float(dist[dst]), path[::-1]

    def with_lengths(self, lengths):
        return TriMesh(self.n_vertices, self.edges, lengths, self.faces, self.marked,
                       self.coords, validate=False)

    def with_marks(self, marked):
        m = TriMesh(self.n_vertices, self.edges, self.lengths, self.faces, marked,
                    self.coords, self.length_text, validate=False)
        return m

    def scaled(self, factor):
        return self.with_lengths([w * factor for w in self.lengths]).with_marks(self.marked)


# ---------------------------------------------------------------------- I/O
def load_mesh(path) -> TriMesh:
    """Read an MMESH file and validate every mesh invariant."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SyskitError("PARSE", f"cannot read {path}: {exc.strerror}") from None
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        if lines[0] != ["MMESH", "1"]:
            raise ValueError("missing 'MMESH 1' header")
        nv, ne, nf, nm = (int(x) for x in lines[1])
        pos = 2
        coords = []
        for k in range(nv):
            row = lines[pos + k]
            if row[0] != "v" or int(row[1]) != k or len(row) not in (2, 5):
                raise ValueError(f"bad vertex line {row}")
            coords.append([float(x) for x in row[2:]] if len(row) == 5 else None)
        pos += nv
        edges, lengths, texts = [], [], []
        for k in range(ne):
            row = lines[pos + k]
            if row[0] != "e" or int(row[1]) != k or len(row) != 5:
                raise ValueError(f"bad edge line {row}")
            edges.append((int(row[2]), int(row[3])))
            lengths.append(float(row[4]))
            texts.append(row[4])
        pos += ne
        faces = []
        for k in range(nf):
            row = lines[pos + k]
            if row[0] != "f" or int(row[1]) != k or len(row) != 5:
                raise ValueError(f"bad face line {row}")
            faces.append(tuple(int(x) for x in row[2:]))
        pos += nf
        marked = []
        for k in range(nm):
            row = lines[pos + k]
            if row[0] != "m" or len(row) != 2:
                raise ValueError(f"bad mark line {row}")
            marked.append(int(row[1]))
        if pos + nm != len(lines):
            raise ValueError("trailing lines")
        for u, v in edges:
            if not (0 <= u < nv and 0 <= v < nv):
                raise ValueError("edge endpoint out of range")
    except (ValueError, IndexError) as exc:
        raise SyskitError("PARSE", str(exc)) from None
    has_coords = nv > 0 and all(c is not None for c in coords)
    return TriMesh(nv, edges, lengths, faces, marked, coords if has_coords else None, texts)


def _fmt(x):
    return repr(float(x))


def save_mesh(M: TriMesh, path):
    texts = M.length_text or tuple(_fmt(w) for w in M.lengths)
    out = ["MMESH 1", f"{M.n_vertices} {M.n_edges} {len(M.faces)} {len(M.marked)}"]
    for v in range(M.n_vertices):
        if M.coords is not None:
            x, y, z = M.coords[v]
            out.append(f"v {v} {_fmt(x)} {_fmt(y)} {_fmt(z)}")
        else:
            out.append(f"v {v}")
    for i, ((u, v), t) in enumerate(zip(M.edges, texts)):
        out.append(f"e {i} {u} {v} {t}")
    for i, (a, b, c) in enumerate(M.faces):
        out.append(f"f {i} {a} {b} {c}")
    out += [f"m {m}" for m in M.marked]
    Path(path).write_text("\n".join(out) + "\n")


# ------------------------------------------------------------ geodesics
def _steiner_fractions(steiner):
    """Nested point set: every level contains all coarser levels."""
    fr = set()
    for t in range(1, steiner + 1):
        for j in range(1, t + 1):
            fr.add(j / (t + 1))
    return sorted(fr)


def geodesic_distance(M: TriMesh, source: int, steiner: int = 0):
    """Distances from ``source`` to every vertex.

    With ``steiner = 0`` this is the shortest path along mesh edges.  With
    ``steiner = s`` each edge also carries the points at fractions j/(t+1) for
    every t <= s, and all boundary points of a face are joined by straight
    chords inside the flattened face.  The refined graphs are nested, so the
    result never increases with ``s``.
    """
    if steiner <= 0:
        dist, _ = M.dijkstra(source)
        return dist
    fr = _steiner_fractions(steiner)
    nv = M.n_vertices
    k = len(fr)
    # node id of the j-th Steiner point on edge e, oriented from edges[e][0]
    def pid(e, j):
        return nv + e * k + j

    best = {}

    def link(x, y, d):
        key = (x, y) if x < y else (y, x)
        if d < best.get(key, math.inf):
            best[key] = d

    for face, (a, b, c) in enumerate(M.faces):
        P = M.face_flat(face)
        corner = {a: P[0], b: P[1], c: P[2]}
        pts = [(a, P[0], None), (b, P[1], None), (c, P[2], None)]
        for e in M.face_edges[face]:
            u, v = M.edges[e]
            for j, t in enumerate(fr):
                pts.append((pid(e, j), (1 - t) * corner[u] + t * corner[v], e))
        for i in range(len(pts)):
            ni, pi, ei = pts[i]
            for j in range(i + 1, len(pts)):
                nj, pj, ej = pts[j]
                if ei is not None and ei == ej:
                    continue
                d = float(np.hypot(*(pi - pj)))
                if d > 0:
                    link(ni, nj, d)
    for e, (u, v) in enumerate(M.edges):
        w = M.lengths[e]
        chain = [u] + [pid(e, j) for j in range(k)] + [v]
        ts = [0.0] + fr + [1.0]
        for x in range(len(chain) - 1):
            link(chain[x], chain[x + 1], (ts[x + 1] - ts[x]) * w)
    n = nv + M.n_edges * k
    keys = list(best)
    rows = [x for x, _ in keys]
    cols = [y for _, y in keys]
    G = csr_matrix((list(best.values()), (rows, cols)), shape=(n, n))
    dist = _cs_dijkstra(G, directed=False, indices=source)
    return dist[:nv]

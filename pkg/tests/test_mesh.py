import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute
from syskit.errors import SyskitError
from syskit.fixtures import flat_torus, genus2, hairy_torus, icosphere, jitter_lengths, marked_sphere
from syskit.mesh import TriMesh, geodesic_distance, load_mesh, save_mesh

TETRA = """MMESH 1
4 6 4 0
v 0
v 1
v 2
v 3
e 0 0 1 1
e 1 0 2 1
e 2 0 3 1
e 3 1 2 1
e 4 1 3 1
e 5 2 3 1
f 0 0 1 2
f 1 0 3 1
f 2 0 2 3
f 3 1 3 2
"""


def _write(tmp_path, text, name="m.mmesh"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_tetrahedron(tmp_path):
    M = load_mesh(_write(tmp_path, TETRA))
    assert M.genus == 0 and M.is_closed
    assert M.area == pytest.approx(math.sqrt(3))


def test_flat_torus_4():
    M = flat_torus(4)
    assert (M.genus, M.n_vertices, M.area) == (1, 16, pytest.approx(16.0))


def test_triangle_inequality_error(tmp_path):
    bad = TETRA.replace("e 0 0 1 1", "e 0 0 1 3")
    with pytest.raises(SyskitError) as exc:
        load_mesh(_write(tmp_path, bad))
    assert exc.value.code == "TRIANGLE_INEQUALITY"


def test_nonmanifold_error():
    # three triangles on one edge
    faces = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
    edges = sorted({tuple(sorted(p)) for f in faces for p in ((f[0], f[1]), (f[1], f[2]), (f[0], f[2]))})
    with pytest.raises(SyskitError) as exc:
        TriMesh(5, edges, [1.0] * len(edges), faces)
    assert exc.value.code == "NONMANIFOLD"


def test_nonorientable_error():
    faces = [(0, 1, 2), (1, 2, 3), (2, 3, 4), (3, 4, 0), (4, 0, 1)]
    edges = sorted({tuple(sorted(p)) for f in faces for p in ((f[0], f[1]), (f[1], f[2]), (f[0], f[2]))})
    with pytest.raises(SyskitError) as exc:
        TriMesh(5, edges, [1.0] * len(edges), faces)
    assert exc.value.code == "NONORIENTABLE"


def test_parse_errors(tmp_path):
    for text in ("MMESH 2\n", TETRA.replace("f 3 1 3 2", "f 3 1 3"), TETRA + "junk\n",
                 TETRA.replace("f 3 1 3 2", "f 3 1 3 9")):
        with pytest.raises(SyskitError) as exc:
            load_mesh(_write(tmp_path, text))
        assert exc.value.code == "PARSE"
    with pytest.raises(SyskitError) as exc:
        load_mesh(tmp_path / "missing.mmesh")
    assert exc.value.code == "PARSE"


def test_round_trip_keeps_decimal_text(tmp_path):
    text = TETRA.replace("e 0 0 1 1", "e 0 0 1 1.0000").replace("4 6 4 0", "4 6 4 1") + "m 2\n"
    p = _write(tmp_path, text)
    M = load_mesh(p)
    q = tmp_path / "out.mmesh"
    save_mesh(M, q)
    assert q.read_text() == text
    assert M.marked == (2,)


def test_fixture_round_trip(tmp_path):
    M = genus2()
    save_mesh(M, tmp_path / "g.mmesh")
    N = load_mesh(tmp_path / "g.mmesh")
    assert N.edges == M.edges and N.lengths == M.lengths and N.genus == 2


def test_geodesic_examples():
    faces = [(0, 1, 2)]
    T = TriMesh(3, [(0, 1), (0, 2), (1, 2)], [1, 1, 1], faces)
    assert geodesic_distance(T, 0)[2] == 1
    M = flat_torus(4)
    assert geodesic_distance(M, 0)[1] == 1
    sq = TriMesh(4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)], [1, 1.5, 1, 1, 1], [(0, 1, 2), (0, 2, 3)])
    assert geodesic_distance(sq, 0)[2] == 1.5


def test_geodesic_matches_networkx():
    M = genus2()
    d = geodesic_distance(M, 5)
    ref = brute.graph_distances(M, 5)
    assert np.allclose(d, [ref[v] for v in range(M.n_vertices)])


def test_steiner_monotone_and_converging():
    M = icosphere(1)
    prev = geodesic_distance(M, 0, 0)
    for s in (1, 2, 3):
        cur = geodesic_distance(M, 0, s)
        assert np.all(cur <= prev + 1e-12)
        prev = cur
    # antipode on the unit sphere: great-circle distance pi, chords are shorter
    far = int(np.argmax(prev))
    assert prev[far] < geodesic_distance(M, 0, 0)[far]
    assert prev[far] > 2.0


@pytest.mark.parametrize("M", [flat_torus(5), genus2(), hairy_torus(2, 1.0), icosphere(1), marked_sphere(6)],
                         ids=["torus", "genus2", "hairy2", "sphere", "marked6"])
def test_euler_characteristic_parity(M):
    chi = M.euler_characteristic
    assert chi % 2 == 0 and chi <= 2
    assert M.genus == (2 - chi) // 2


@given(st.floats(0.0, 0.2), st.integers(0, 2 ** 32 - 1))
def test_jitter_keeps_mesh_valid(amount, seed):
    M = jitter_lengths(flat_torus(4), amount, seed)
    base = np.array(flat_torus(4).lengths)
    ratio = np.array(M.lengths) / base
    assert np.all(ratio >= 1 - amount - 1e-12) and np.all(ratio <= 1 + amount + 1e-12)
    assert M.genus == 1

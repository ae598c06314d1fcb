import numpy as np
import pytest

from oracles import brute
from syskit.errors import SyskitError
from syskit.fixtures import flat_torus, hairy_torus, icosphere
from syskit.mesh import geodesic_distance
from syskit.packing import disk_regularity_check, maximal_disk_packing, voronoi_cells

T8 = flat_torus(8)


def test_one_big_disk():
    assert maximal_disk_packing(icosphere(1), 10.0) == [0]


def test_half_unit_packing_takes_every_vertex():
    assert len(maximal_disk_packing(T8, 0.5)) == 64


def test_unit_packing_counts_against_oracle():
    far = maximal_disk_packing(T8, 1.0)
    idx = maximal_disk_packing(T8, 1.0, order="index")
    assert far == brute.farthest_packing(T8, 1.0)
    assert idx == brute.packing_scan(T8, 1.0, range(64))
    assert (len(far), len(idx)) == (14, 16)


@pytest.mark.parametrize("r0", [0.75, 1.0, 1.6])
def test_packing_is_maximal_and_disjoint(r0):
    M = icosphere(2).scaled(3.0)
    C = maximal_disk_packing(M, r0, seeds=[7])
    assert C[0] == 7
    D = np.array([geodesic_distance(M, c) for c in C])
    for i in range(len(C)):
        for j in range(i + 1, len(C)):
            assert D[i, C[j]] >= 2 * r0
    assert np.all(D.min(axis=0) < 2 * r0)
    if disk_regularity_check(M, r0)["passed"]:
        assert len(C) <= 2 * M.area / r0 ** 2


def test_seeds_too_close():
    with pytest.raises(SyskitError) as exc:
        maximal_disk_packing(T8, 1.0, seeds=[0, 1])
    assert exc.value.code == "SEEDS_TOO_CLOSE"


def test_voronoi_examples():
    V = voronoi_cells(T8, [0])
    assert V.cells == (tuple(range(64)),)
    V = voronoi_cells(T8, [0, 36])
    d0, d1 = brute.graph_distances(T8, 0), brute.graph_distances(T8, 36)
    want = [0 if d0[v] <= d1[v] else 1 for v in range(64)]
    assert list(V.owner) == want
    # the diagonals all run the same way, so ties are frequent and go to centre 0
    assert [len(c) for c in V.cells] == [39, 25]


def test_voronoi_lattice_adjacency_within_4r0():
    C = maximal_disk_packing(T8, 1.0, order="index")
    V = voronoi_cells(T8, C)
    for i, j in V.adjacent_pairs():
        assert geodesic_distance(T8, C[i])[C[j]] <= 4.0


def test_voronoi_cells_partition_and_are_connected():
    M = icosphere(2)
    C = maximal_disk_packing(M, 0.3)
    V = voronoi_cells(M, C)
    assert sorted(v for c in V.cells for v in c) == list(range(M.n_vertices))
    for i, cell in enumerate(V.cells):
        assert C[i] in cell
        for v in cell:
            # the predecessor chain stays inside the cell and realizes dist
            length, x = 0.0, v
            while x != C[i]:
                p = V.pred[x]
                assert V.owner[p] == i
                length += M.lengths[M.edge_index[(min(x, p), max(x, p))]]
                x = p
            assert length == pytest.approx(V.dist[v])
    r_max = max(M.lengths)
    for i, j in V.adjacent_pairs():
        assert geodesic_distance(M, C[i])[C[j]] <= 4 * 0.3 + r_max + 1e-12


def test_regularity_examples():
    assert disk_regularity_check(T8, 0.5)["passed"]
    assert disk_regularity_check(T8, 0.0)["passed"]
    rep = disk_regularity_check(hairy_torus(1, 0.1), 1.0)
    assert not rep["passed"] and rep["failures"]

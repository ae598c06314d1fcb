import math

import pytest

from oracles import brute
from syskit.errors import SyskitError
from syskit.fixtures import flat_torus, genus2, icosphere, pinched_genus2
from syskit.homology import rank_z2, shortest_nontrivial_loop_oracle
from syskit.nerve import (build_nerve, minimize_to_homology_iso, normalization_scale, short_homology_loops,
                          short_independent_system, theorem_bound)
from syskit.packing import maximal_disk_packing

T8 = flat_torus(8)


def test_nerve_on_torus():
    N = build_nerve(T8, 4.0, 0.2)
    assert N.r0 == 0.25
    assert list(N.centers) == maximal_disk_packing(T8, 0.25)
    assert max(N.path_lengths) < 2.0
    assert all(w == 2.0 for _, _, w in N.graph.edges)
    assert all(d <= 4 * N.r0 + 2 * N.eps for d in N.path_lengths)


def test_single_disk_nerve():
    N = build_nerve(icosphere(1), 100.0, allow_irregular=True)
    assert (N.graph.n_vertices, N.graph.n_edges, N.regular) == (1, 0, False)


def test_epsilon_too_large():
    with pytest.raises(SyskitError) as exc:
        build_nerve(T8, 4.0, 0.6)
    assert exc.value.code == "EPSILON_TOO_LARGE"


def test_irregular_metric_needs_override():
    with pytest.raises(SyskitError) as exc:
        build_nerve(icosphere(1), 100.0)
    assert exc.value.code == "IRREGULAR_METRIC"


@pytest.mark.parametrize("M,ell,betti", [(T8, 4.0, 2), (icosphere(2), 4.0, 0), (genus2(), 4.0, 4)],
                         ids=["torus", "sphere", "genus2"])
def test_minimized_betti(M, ell, betti):
    iso = minimize_to_homology_iso(build_nerve(M, ell, allow_irregular=True), M)
    assert iso.rank == betti
    G = iso.graph
    assert G.n_edges - G.n_vertices + 1 == betti
    assert brute.gf2_rank(iso.chord_classes) == betti


def test_coarse_nerve_is_not_epimorphic():
    with pytest.raises(SyskitError) as exc:
        short_homology_loops(pinched_genus2(1.0), 1.0, 4)
    assert exc.value.code == "NOT_EPIMORPHIC"


def test_torus_loops_within_bound():
    sys_len, _ = shortest_nontrivial_loop_oracle(T8)
    rep = short_homology_loops(T8, sys_len, 2)
    assert rep["rank"] == 2
    assert all(row["pass"] for row in rep["bounds"])
    assert rep["inputs"]["normalization_scale"] == pytest.approx(1 / 8)
    for lp, row in zip(rep["loops"], rep["bounds"]):
        assert lp["length"] >= sys_len
        # the projection never lengthens a nerve cycle
        assert row["length"] <= row["graph_cycle_length"]


def test_genus2_four_loops():
    rep = short_homology_loops(genus2(), 4.0, 4)
    assert rep["rank"] == 4 and len(rep["loops"]) == 4
    assert [round(x["length"], 9) for x in rep["loops"]] == [4.0, 8.0, 16.0, 19.0]


def test_sphere_has_nothing_to_find():
    with pytest.raises(SyskitError) as exc:
        short_homology_loops(icosphere(2), 0.5, 1)
    assert exc.value.code == "FOREST"


def test_theorem_bound_formula():
    g, k, ell = 3, 2, 0.5
    assert theorem_bound(g, k, ell) == pytest.approx(2 ** 16 / 0.5 * math.log(6) / 5 * 3)
    assert theorem_bound(g, k, 2.0) == pytest.approx(2 ** 16 * math.log(6) / 5 * 3)


def test_normalization_scale():
    assert normalization_scale(T8) == pytest.approx(1 / 8)
    M = genus2()
    assert (M.area * normalization_scale(M) ** 2) == pytest.approx(4 * math.pi)


def test_independent_system_on_torus():
    M = flat_torus(6)
    rep = short_independent_system(M, 1, 7.0)
    assert rep["loops"][0]["length"] == shortest_nontrivial_loop_oracle(M)[0]


def test_independent_system_pinched():
    rep = short_independent_system(pinched_genus2(0.5), 2, 1.0)
    lens = [lp["length"] for lp in rep["loops"]]
    assert lens[0] == pytest.approx(0.5) and rep["loops"][0]["short"]
    assert rep["rank"] == 2
    assert rank_z2(lp.cls for lp in rep["_loops"]) == 2
    # lambda = target / g = 1: the C_lambda bound is undefined there
    assert all(b["bound"] is None for b in rep["bounds"])
    half = short_independent_system(pinched_genus2(0.5), 1, 1.0)
    assert half["inputs"]["lambda"] == 0.5 and half["bounds"][0]["pass"]


def test_target_unreachable():
    with pytest.raises(SyskitError) as exc:
        short_independent_system(flat_torus(5), 3, 1.0)
    assert exc.value.code == "TARGET_UNREACHABLE"


def test_full_rank_system_on_genus2():
    rep = short_independent_system(genus2(), 4, 5.0)
    assert rep["rank"] == 4
    assert rep["bounds"][0]["bound"] is None

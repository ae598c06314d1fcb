import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute
from syskit.errors import SyskitError
from syskit.fixtures import flat_torus, genus2, hairy_torus, icosphere, pinched_genus2
from syskit.homology import (homology_class, make_loop, rank_z2, shortest_loop_outside,
                             shortest_nontrivial_loop_oracle, tree_cotree_basis)
from syskit.mesh import TriMesh


def _meridian(n):
    return [j * n for j in range(n)]      # column i = 0


def _longitude(n):
    return list(range(n))                 # row j = 0


def test_signature_counts():
    assert tree_cotree_basis(icosphere(0)).dim == 0
    assert tree_cotree_basis(flat_torus(4)).dim == 2
    assert tree_cotree_basis(genus2()).dim == 4
    assert tree_cotree_basis(hairy_torus(3, 1.0)).dim == 8


def test_not_closed():
    disk = TriMesh(3, [(0, 1), (0, 2), (1, 2)], [1, 1, 1], [(0, 1, 2)])
    with pytest.raises(SyskitError) as exc:
        tree_cotree_basis(disk)
    assert exc.value.code == "NOT_CLOSED"


def test_class_examples():
    M = flat_torus(5)
    for f in M.faces[:10]:
        assert homology_class(M, list(f)) == (0, 0)
    a, b = make_loop(M, _meridian(5)), make_loop(M, _longitude(5))
    assert rank_z2([a.cls, b.cls]) == 2
    assert homology_class(M, _meridian(5) * 2) == (0, 0)


def test_not_a_loop():
    M = flat_torus(4)
    with pytest.raises(SyskitError) as exc:
        homology_class(M, [0, 5, 10, 3])
    assert exc.value.code == "NOT_A_LOOP"


def test_oracle_examples():
    assert shortest_nontrivial_loop_oracle(flat_torus(6))[0] == 6.0
    # waist of the handle (4) is shorter than the torus meridian (8)
    assert shortest_nontrivial_loop_oracle(genus2())[0] == 4.0
    assert shortest_nontrivial_loop_oracle(pinched_genus2(0.5))[0] == pytest.approx(0.5)
    with pytest.raises(SyskitError) as exc:
        shortest_nontrivial_loop_oracle(icosphere(0))
    assert exc.value.code == "NO_NONTRIVIAL_CLASS"
    with pytest.raises(SyskitError) as exc:
        shortest_nontrivial_loop_oracle(hairy_torus(3, 1.0))
    assert exc.value.code == "GENUS_TOO_LARGE"


@pytest.mark.parametrize("M", [flat_torus(5), genus2(), pinched_genus2(1.0)], ids=["torus", "genus2", "pinched"])
def test_fast_finder_agrees_with_oracle(M):
    length, loop = shortest_nontrivial_loop_oracle(M)
    fast = shortest_loop_outside(M)
    assert fast.length == pytest.approx(length)
    assert loop.cls != 0 and fast.cls != 0
    assert loop.length == pytest.approx(M.length_of_walk(list(loop.vertices)))


def test_finder_leaves_span():
    M = genus2()
    picked = []
    for _ in range(4):
        lp = shortest_loop_outside(M, [p.cls for p in picked])
        picked.append(lp)
    assert brute.gf2_rank(p.cls for p in picked) == 4
    assert shortest_loop_outside(M, [p.cls for p in picked]) is None
    lengths = [p.length for p in picked]
    assert lengths == sorted(lengths)


TORUS = flat_torus(6)


def _closed_walk(M, start, steps):
    walk, v = [start], start
    for s in steps:
        nbrs = M.neighbors[v]
        v = nbrs[s % len(nbrs)][0]
        walk.append(v)
    if v == start:
        return walk[:-1]
    back = M.shortest_path(v, start)[1]
    return walk + back[1:-1]


@settings(max_examples=40)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=12), st.lists(st.integers(0, 5), min_size=1, max_size=12))
def test_class_is_additive(s1, s2):
    a = _closed_walk(TORUS, 0, s1)
    b = _closed_walk(TORUS, 0, s2)
    ca, cb = homology_class(TORUS, a), homology_class(TORUS, b)
    cab = homology_class(TORUS, a + b)
    assert cab == tuple(x ^ y for x, y in zip(ca, cb))


def test_oracle_on_jittered_torus_returns_a_real_loop():
    from syskit.fixtures import flat_torus, jitter_lengths
    M = jitter_lengths(flat_torus(6), 0.03, seed=0)
    length, lp = shortest_nontrivial_loop_oracle(M)
    assert len(lp.vertices) >= 3 and lp.cls != 0
    assert lp.length == pytest.approx(length)

import math

import numpy as np
import pytest

from syskit import fixtures as F
from syskit import pants as Pm
from syskit.errors import SyskitError
from syskit.surgery import component_stats


def column_height(n):
    return np.array([-math.cos(2 * math.pi * (v % n) / n) for v in range(n * n)])


def level_length_oracle(n, f):
    # on the grid a height depending on the column only has vertical level lines,
    # each one a meridian of length n
    col = f[:n]
    vals = np.unique(col)
    best = 0
    for t in (vals[:-1] + vals[1:]) / 2:
        crossings = sum((col[i] < t) != (col[(i + 1) % n] < t) for i in range(n))
        best = max(best, crossings * n)
    return best


def test_reeb_betti_numbers():
    T = F.flat_torus(6)
    assert Pm.reeb_graph(T, T.coords[:, 2]).betti == 1
    S = F.icosphere(1)
    assert Pm.reeb_graph(S, S.coords[:, 2]).betti == 0
    G = F.genus2()
    assert Pm.reeb_graph(G, G.coords[:, 2]).betti == 2


def test_sweep_width_two_meridians():
    n = 8
    T = F.flat_torus(n)
    f = column_height(n)
    assert level_length_oracle(n, f) == 2 * n
    assert Pm.sweep_width(T, f) == pytest.approx(2 * n)


def test_reeb_decomposition_torus():
    n = 8
    P = Pm.reeb_pants_decomposition(F.flat_torus(n), column_height(n))
    assert P.valid and P.degenerate == "degenerate-chi0"
    assert P.lengths == pytest.approx([n])
    assert all(c["pass"] for c in P.audits["checks"])


def test_reeb_decomposition_genus2():
    G = F.genus2()
    P = Pm.reeb_pants_decomposition(G, G.coords[:, 2])
    assert P.valid and len(P.loops) == 3
    assert [c["type"] for c in P.components] == ["pants", "pants"]
    basis = Pm.extract_independent_from_pants(G, P)
    assert len(basis) == 2


def test_marked_sphere_four_marks():
    S = F.marked_sphere(4)
    P = Pm.marked_sphere_decomposition(S)
    assert P.valid and len(P.loops) == 1
    assert Pm.extract_independent_from_pants(S, P) == []
    assert all(c["pass"] for c in P.audits["checks"])


def test_marked_sphere_errors():
    cases = [((F.flat_torus(4),), {}, "NOT_SPHERE"),
             ((F.marked_sphere(3),), {}, "TOO_FEW_MARKS"),
             ((F.marked_sphere(4),), {"ell": 100.0}, "MARKS_TOO_CLOSE")]
    for args, kw, code in cases:
        with pytest.raises(SyskitError) as exc:
            Pm.marked_sphere_decomposition(*args, **kw)
        assert exc.value.code == code


def test_kappa():
    assert [Pm.kappa(n) for n in (4, 5, 8, 9, 64)] == [3, 3, 4, 4, 7]


def test_validator_agrees_with_surgery():
    P = Pm.genus_surface_decomposition(F.genus2(), ell=1.0)
    cut = set()
    for w in P.loops:
        cut.update(P.mesh.walk_edges(list(w)))
    ours = sorted((c["type"], c["chi"], c["boundaries"]) for c in P.components)
    theirs = sorted((c["type"], c["chi"], c["boundaries"])
                    for c in component_stats(P.mesh, cut, list(P.marks)))
    assert ours == theirs


def test_validator_rejects_shared_vertices():
    T = F.flat_torus(4)
    with pytest.raises(SyskitError) as exc:
        Pm.check_decomposition(T, [[0, 1, 2, 3], [0, 4, 8, 12]])
    assert exc.value.code == "BAD_LOOP"


@pytest.mark.parametrize("name,make,loops", [
    ("torus+mark", lambda: F.flat_torus(6).with_marks([0]), 1),
    ("genus2", F.genus2, 3),
])
def test_genus_pipeline(name, make, loops):
    M = make()
    P = Pm.genus_surface_decomposition(M, ell=1.0)
    assert P.valid and len(P.loops) == loops
    assert P.audits["rank"] == M.genus


def test_induction_limit():
    G = F.genus2()
    with pytest.raises(SyskitError) as exc:
        Pm._decompose_closed(G, [], [], 1.0, G.coords[:, 2], limit=0)
    assert exc.value.code == "INDUCTION_OVERFLOW"


def test_non_finite_heights():
    T = F.flat_torus(4)
    with pytest.raises(SyskitError) as exc:
        Pm.reeb_graph(T, np.full(T.n_vertices, np.nan))
    assert exc.value.code == "NON_FINITE_VALUES"


def test_double_cover_genus():
    S, coc = F.hyperelliptic_sphere(2)
    D = Pm.branched_double_cover(S, set(coc), S.marked)
    assert D.mesh.genus == 2
    assert len(D.proj) == 2 * S.n_vertices - len(S.marked)
    assert D.mesh.area == pytest.approx(2 * S.area)


def test_lift_genus_one_and_two():
    S, coc = F.hyperelliptic_sphere(1)
    C, _, P = Pm.lift_through_double_cover(S, coc)
    assert C.genus == 1 and P.valid and P.degenerate == "degenerate-chi0"
    S, coc = F.hyperelliptic_sphere(2)
    C, _, P = Pm.lift_through_double_cover(S, coc)
    assert C.genus == 2 and P.valid and len(P.loops) == 3
    assert all(c["pass"] for c in P.audits["checks"])


def test_lift_rejects_bad_cocycle():
    S, coc = F.hyperelliptic_sphere(2)
    with pytest.raises(SyskitError) as exc:
        Pm.lift_through_double_cover(S, coc[1:])
    assert exc.value.code == "BAD_BRANCH_DATA"

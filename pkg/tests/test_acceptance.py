"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from syskit import fixtures as F
from syskit import hyperbolic as H
from syskit import nerve as N
from syskit import pants as Pm
from syskit.graph import (WeightedGraph, betti_number, bst_bound, cycle_rank, graph_systole,
                          greedy_step_bound, greedy_systolic_sequence)
from syskit.homology import shortest_nontrivial_loop_oracle
from syskit.report import to_json

GOLDEN = json.loads((Path(__file__).parent / "golden" / "hyperbolic_constants.json").read_text())
ELL = math.acosh(7.5)


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def random_multigraph(rng):
    v = int(rng.integers(1, 31))
    edges = [(int(rng.integers(0, k)), k, float(rng.uniform(0.1, 10))) for k in range(1, v)]
    for _ in range(int(rng.integers(1, 31))):
        edges.append((int(rng.integers(0, v)), int(rng.integers(0, v)), float(rng.uniform(0.1, 10))))
    return WeightedGraph(v, tuple(edges))


def corpus(seed=2024, size=1000):
    rng = np.random.default_rng(seed)
    return [random_multigraph(rng) for _ in range(size)]


def test_c01_bst_bound(verdict):
    graphs = corpus()
    t = time.perf_counter()
    bad = 0
    for G in graphs:
        assert betti_number(G) >= 1
        if graph_systole(G)[0] > bst_bound(G):
            bad += 1
    dt = time.perf_counter() - t
    verdict(1, bad == 0 and dt < 10, f"{len(graphs)} graphs, {bad} violations, {dt:.2f} s")


def test_c02_greedy_sequence(verdict):
    bad = 0
    for G in corpus():
        b = betti_number(G)
        seq = greedy_systolic_sequence(G, b)
        active = set(range(G.n_edges))
        prev = 0.0
        for k, (cyc, removed) in enumerate(seq, start=1):
            if cyc.length > greedy_step_bound(b, k, G.total_length(active)) or cyc.length < prev:
                bad += 1
            prev = cyc.length
            active.discard(removed)
        if cycle_rank([c for c, _ in seq]) != b:
            bad += 1
    verdict(2, bad == 0, f"1000 graphs, {bad} violations of step bound / rank / order")


def mesh_corpus():
    out = [F.jitter_lengths(F.flat_torus(6 + i % 4), 0.03, seed=i) for i in range(25)]
    out += [F.jitter_lengths(F.genus2(8, 4.0 + i % 3), 0.03, seed=100 + i) for i in range(25)]
    return out


def test_c03_oracle_equivalence(verdict):
    bad = 0
    meshes = mesh_corpus()
    for M in meshes:
        sys_len, _ = shortest_nontrivial_loop_oracle(M)
        rep = N.short_homology_loops(M, sys_len, 2 * M.genus)
        bad += sum(lp["length"] < sys_len - 1e-9 for lp in rep["loops"])
        bad += sum(not b["pass"] for b in rep["bounds"])
        bad += rep["rank"] != 2 * M.genus
    verdict(3, bad == 0, f"{len(meshes)} meshes (2g <= 4), {bad} violations")


def test_c04_fat_torus(verdict):
    grid = np.linspace(H.EPS_MAX / 1000, H.EPS_MAX, 1000)
    ineq = all(2 * ft.a > e and 2 * ft.h > 2 * ft.a for e, ft in ((e, H.fat_torus(float(e))) for e in grid))
    top = H.fat_torus(H.EPS_MAX)
    gold = abs(top.a - float(GOLDEN["a_at_eps_max"])) < 1e-12 and abs(top.h - float(GOLDEN["h_at_eps_max"])) < 1e-12
    ok = (ineq and gold and abs(top.a - 0.91504) < 1e-4 and abs(top.h - 1.16598) < 1e-4
          and abs(math.sinh(H.EPS_MAX / 2) - 1) < 1e-12)
    verdict(4, ok, f"a = {top.a:.6f}, h = {top.h:.6f}, grid inequalities {ineq}, golden match {gold}")


def test_c05_capacity_constant(verdict):
    val = math.pi - 2 * H.collar_theta0(0.5 * math.asinh(1))
    ok = abs(val - 0.8542) < 1e-3 and abs(val - float(GOLDEN["pi_minus_2theta0"])) < 1e-12
    verdict(5, ok, f"pi - 2 theta0 = {val:.6f}")


def test_c06_polygon_solvers(verdict):
    Ls = np.linspace(0.5, 6, 20)
    worst = max(H.solve_hexagon(float(th), ELL, float(L)).residual
                for th in np.linspace(math.pi / 6, math.pi / 3, 20) for L in Ls)
    b3 = [H.assemble_X3(float(L), ELL).boundary for L in Ls]
    b7 = [H.assemble_X7(float(L), ELL).boundary for L in Ls]
    dec = all(np.diff(b3) < 0) and all(np.diff(b7) < 0)
    piece = H.find_L_for_collar(5.0, ELL)
    width = H.collar_width(piece.boundary)
    ok = worst < 1e-9 and dec and width >= 5.0
    verdict(6, ok, f"max residual {worst:.1e}, X3/X7 decreasing {dec}, collar at L = {piece.L:.3f} is {width:.6f}")


def test_c07_construction_arithmetic(verdict):
    plan = H.construction_plan(3, 2, ELL)
    counts = (plan.euler["faces"], plan.euler["vertices"]) == (28 * 2, 12 * 2)
    cex = [H.cex_parameters(C) for C in (1.1, 2.0, 10.0)]
    cex_ok = all(r["eps"] * r["m"] ** 2 <= 0.01 * (1 + 1e-12) for r in cex)
    ok = plan.genus_formula == 87 and not plan.consistent and counts and cex_ok
    verdict(7, ok, f"genus {plan.genus_formula}, flagged {not plan.consistent}, "
                   f"F = {plan.euler['faces']}, V = {plan.euler['vertices']}, cex {cex_ok}")


def test_c08_marked_sphere(verdict):
    rows = []
    ok = True
    for n in (4, 8, 16, 32, 64):
        P = Pm.marked_sphere_decomposition(F.marked_sphere(n))
        a = P.audits
        good = (P.valid and all(c["type"] == "pants" for c in P.components)
                and all(c["pass"] for c in a["checks"]) and a["kappa"] == int(math.log2(n)) + 1)
        ok &= good
        rows.append(f"n={n}:{'ok' if good else 'bad'}(delta={a['delta_corridor']:.2f})")
    verdict(8, ok, " ".join(rows))


PIPELINE = {
    "torus+1": lambda: F.flat_torus(6).with_marks([0]),
    "genus2": lambda: F.genus2(),
    "pinched-genus2": lambda: F.pinched_genus2(0.5),
    "hairy-torus(3)": lambda: F.hairy_torus(3, 0.1),
}


def test_c09_full_pipeline(verdict):
    rows = []
    ok = True
    for name, make in PIPELINE.items():
        M = make()
        P = Pm.genus_surface_decomposition(M, ell=1.0)
        g, n = M.genus, len(M.marked)
        rank = len(Pm.extract_independent_from_pants(M, P))
        good = P.valid and len(P.loops) == 3 * g - 3 + n and rank == g
        ok &= good
        rows.append(f"{name}:{len(P.loops)} loops, rank {rank}")
    verdict(9, ok, "; ".join(rows))


def test_c10_hyperelliptic_lift(verdict):
    S, coc = F.hyperelliptic_sphere(2)
    C, _, P = Pm.lift_through_double_cover(S, coc)
    rh = all(c["pass"] for c in P.audits["checks"])
    ok = C.genus == 2 and rh and P.valid
    verdict(10, ok, f"cover genus {C.genus}, Riemann-Hurwitz {rh}, {len(P.loops)} loops valid {P.valid}")


def _fingerprint():
    graphs = corpus(seed=7, size=50)
    parts = [to_json({"sys": [graph_systole(G)[0] for G in graphs]})]
    M = mesh_corpus()[30]
    rep = N.short_homology_loops(M, shortest_nontrivial_loop_oracle(M)[0], 4)
    parts.append(to_json(rep))
    parts.append(to_json(Pm.marked_sphere_decomposition(F.marked_sphere(16)).as_dict()))
    parts.append(to_json(Pm.genus_surface_decomposition(F.genus2(), ell=1.0).as_dict()))
    parts.append(to_json(Pm.lift_through_double_cover(*F.hyperelliptic_sphere(2))[2].as_dict()))
    return "".join(parts)


def test_c11_determinism(verdict):
    a, b = _fingerprint(), _fingerprint()
    verdict(11, a == b, f"{len(a)} bytes of report output, identical {a == b}")

"""Command-line front end: ``syskit gen`` writes fixture meshes, ``syskit run`` runs pipelines."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fixtures, hyperbolic as hyp
from .errors import SyskitError
from .graph import (betti_number, bst_bound, graph_systole, greedy_step_bound, greedy_systolic_sequence,
                    read_wgraph)
from .homology import tree_cotree_basis
from .mesh import load_mesh, save_mesh
from .nerve import (C0_NUMERATOR, C_LAMBDA_NUMERATOR, normalization_scale, short_homology_loops,
                    short_independent_system)
from .pants import (MARKED_SPHERE_C, extract_independent_from_pants, genus_surface_decomposition,
                    kappa, lift_through_double_cover, marked_sphere_decomposition,
                    reeb_pants_decomposition)
from .report import failed_checks, render_figures, to_csv, to_json

log = logging.getLogger("syskit")

EXIT_OK, EXIT_ERROR, EXIT_AUDIT = 0, 1, 2


@dataclass
class RunConfig:
    ell: float | None = None
    eps: str | None = None
    count: int | None = None
    target: int | None = None
    seed: int = 0
    steiner: int = 0
    fmt: str = "json"
    out: str | None = None
    height: str = "z"
    consts: dict = field(default_factory=dict)

    def const(self, name, default):
        return float(self.consts.get(name, default))

    def echo(self):
        return {"ell": self.ell, "eps": self.eps, "count": self.count, "target": self.target,
                "seed": self.seed, "steiner": self.steiner, "consts": dict(sorted(self.consts.items()))}


# ------------------------------------------------------------------- gen
def _gen_mesh(kind, params):
    def need(k):
        if len(params) != k:
            raise SyskitError("BAD_PARAMS", f"{kind} takes {k} parameter(s), got {len(params)}")

    try:
        if kind == "flat-torus":
            need(1)
            return fixtures.flat_torus(int(params[0]))
        if kind == "sphere-subdiv":
            need(1)
            return fixtures.icosphere(int(params[0]))
        if kind == "genus2":
            need(0)
            return fixtures.genus2()
        if kind == "pinched-genus2":
            need(1)
            return fixtures.pinched_genus2(float(params[0]))
        if kind == "hairy-torus":
            need(2)
            return fixtures.hairy_torus(int(params[0]), float(params[1]))
        if kind == "marked-sphere":
            need(1)
            return fixtures.marked_sphere(int(params[0]))
    except ValueError as exc:
        raise SyskitError("BAD_PARAMS", str(exc)) from None
    raise SyskitError("BAD_PARAMS", f"unknown fixture kind {kind!r}")


def cmd_gen(args):
    M = _gen_mesh(args.kind, args.params)
    if args.marks:
        M = M.with_marks(fixtures.farthest_point_marks(M, args.marks))
    if args.jitter:
        M = fixtures.jitter_lengths(M, args.jitter, args.seed)
    out = args.out or f"{args.kind}.mmesh"
    save_mesh(M, out)
    summary = {"kind": args.kind, "params": list(args.params), "path": out, "vertices": M.n_vertices,
               "edges": M.n_edges, "faces": len(M.faces), "genus": M.genus, "area": M.area,
               "marks": len(M.marked)}
    sys.stdout.write(to_json(summary))
    return EXIT_OK


# ------------------------------------------------------------ commands
def _need_mesh(paths):
    if len(paths) != 1:
        raise SyskitError("BAD_PARAMS", "this command takes exactly one mesh path")
    return load_mesh(paths[0])


def _height(M, which):
    if which == "index" or M.coords is None:
        return np.arange(M.n_vertices, dtype=float)
    return np.asarray(M.coords)[:, "xyz".index(which)]


def _short_loops(cfg, M):
    if cfg.ell is None:
        raise SyskitError("BAD_PARAMS", "short-loops needs --ell")
    count = cfg.count if cfg.count is not None else 2 * M.genus
    eps = None if cfg.eps is None else float(cfg.eps)
    ell_n = cfg.ell * normalization_scale(M)
    c0 = cfg.const("C0", C0_NUMERATOR) / min(1.0, ell_n)
    rep = short_homology_loops(M, cfg.ell, count, eps, cfg.steiner, c0=c0)
    rep["anchor"] = f"C0 log(2g-k+2)/(2g-k+1) g with C0 = {cfg.const('C0', C0_NUMERATOR):.17g}/min(1, ell)"
    return rep, [list(lp.vertices) for lp in rep["_loops"]]


def _homology_basis(cfg, M):
    g = M.genus
    target = cfg.target if cfg.target is not None else 2 * g
    eps_cut = float(cfg.eps) if cfg.eps is not None else (cfg.ell if cfg.ell is not None else 1.0)
    lam = target / g if g else 1.0
    c_lam = cfg.const("C_lambda", C_LAMBDA_NUMERATOR) / (1 - lam) if lam < 1 else None
    rep = short_independent_system(M, target, eps_cut, c_lam)
    tc = tree_cotree_basis(M)
    rep["tree_cotree"] = {"dim": tc.dim, "genus": tc.genus}
    return rep, [list(lp.vertices) for lp in rep["_loops"]]


def _pants_report(P, M):
    rep = P.as_dict()
    rep["input"] = {"vertices": M.n_vertices, "genus": M.genus, "marks": len(M.marked), "area": M.area}
    rep["refined"] = {"vertices": P.mesh.n_vertices, "faces": len(P.mesh.faces)}
    return rep


def _pants_reeb(cfg, M):
    P = reeb_pants_decomposition(M, _height(M, cfg.height))
    rep = _pants_report(P, M)
    if P.valid and not P.degenerate and P.mesh.genus > 0:
        rep["independent"] = [{"length": lp.length, "vertices": list(lp.vertices)}
                              for lp in extract_independent_from_pants(P.mesh, P)]
    for c in rep["audits"].get("checks", []):
        c["anchor"] = "level-set sweep: every level loop is at most the sweep width"
    return rep, P


def _pants_sphere(cfg, M):
    P = marked_sphere_decomposition(M, None, cfg.ell)
    rep = _pants_report(P, M)
    for c in rep["audits"]["checks"]:
        c["anchor"] = "marked-sphere recursion along the shortcut MST tour"
    rep["audits"]["C"] = MARKED_SPHERE_C
    return rep, P


def _pants_full(cfg, M):
    c_g = cfg.consts.get("C_g")
    P = genus_surface_decomposition(M, None, cfg.ell if cfg.ell is not None else 1.0,
                                    _height(M, cfg.height) if M.genus > 0 else None,
                                    None if c_g is None else float(c_g))
    rep = _pants_report(P, M)
    for c in rep["audits"].get("checks", []):
        c["anchor"] = "cut short loops, split handles, finish with the marked-sphere stage"
    if P.valid and not P.degenerate and P.mesh.genus > 0:
        rep["independent_rank"] = len(extract_independent_from_pants(P.mesh, P))
    return rep, P


def _pants_lift(cfg, M):
    coc = fixtures.branch_cocycle(M)
    c = cfg.consts.get("C_hyp")
    C, lifts, P = lift_through_double_cover(M, coc, None, None if c is None else float(c))
    rep = _pants_report(P, M)
    rep["cocycle_edges"] = len(coc)
    rep["cover"] = {"vertices": C.n_vertices, "faces": len(C.faces), "genus": C.genus}
    for ch in rep["audits"]["checks"]:
        ch["anchor"] = "branched double cover of the marked sphere"
    return rep, P


def _eps_value(cfg):
    if cfg.eps is None or cfg.eps == "max":
        return hyp.EPS_MAX
    return float(cfg.eps)


def _fat_torus(cfg):
    eps = _eps_value(cfg)
    ft = hyp.fat_torus(eps)
    w0 = cfg.const("w0", hyp.W0)
    theta0 = hyp.collar_theta0(w0)
    return {"calculator": "fat-torus", "inputs": {"eps": eps}, "value": ft.a,
            "a": ft.a, "h": ft.h, "sinh_half_eps": math.sinh(eps / 2),
            "flags": {"basis_longer": ft.basis_longer, "height_longer": ft.height_longer},
            "capacity": {"w0": w0, "theta0": theta0, "pi_minus_2theta0": math.pi - 2 * theta0},
            "checks": [{"name": "2a > eps", "lhs": eps, "rhs": 2 * ft.a, "pass": ft.basis_longer,
                        "anchor": "fat torus from right-angled pentagons"},
                       {"name": "2h > 2a", "lhs": 2 * ft.a, "rhs": 2 * ft.h, "pass": ft.height_longer,
                        "anchor": "fat torus from right-angled pentagons"}]}


def _construct(cfg):
    h = int(cfg.const("h", 3))
    m = int(cfg.const("m", 2))
    ell = cfg.ell if cfg.ell is not None else 3.0
    plan = hyp.construction_plan(h, m, ell)
    return {"calculator": "construction-plan", "inputs": {"h": h, "m": m, "ell": ell},
            "value": plan.genus_formula, "genus_formula": plan.genus_formula, "k_formula": plan.k_formula,
            "literal_counts": plan.paper, "euler_counts": plan.euler, "consistent": plan.consistent,
            "triangle_area": plan.triangle_area,
            "flag": None if plan.consistent else
            "literal 14(h-1) triangles / 6(h-1) vertices violate chi = 2 - 2h; "
            "Euler-consistent counts are 28(h-1) / 12(h-1)"}


def _calc(name, inputs, value, anchor, **extra):
    return dict({"calculator": name, "inputs": inputs, "value": value, "anchor": anchor}, **extra)


def _calculator(cmd, cfg):
    k = cfg.const
    if cmd == "calc-fat-torus":
        return _fat_torus(cfg)
    if cmd == "calc-capacity":
        length = cfg.ell if cfg.ell is not None else 1.0
        w0 = k("w0", hyp.W0)
        return _calc(cmd, {"length": length, "w0": w0}, hyp.collar_capacity_bound(length, w0),
                     "length / (pi - 2 theta0), theta0 = arcsin(1/cosh w0)")
    if cmd == "calc-collar":
        b = cfg.ell if cfg.ell is not None else 1.0
        return _calc(cmd, {"boundary": b}, hyp.collar_width(b), "arcsinh(1/sinh(b/2))")
    if cmd == "calc-logh":
        h, m, K = k("h", 2), k("m", 2), k("K", 0.5)
        return _calc(cmd, {"h": h, "m": m, "K": K}, hyp.logh_bound(h, m, K), "(4/3) K m log h")
    if cmd == "calc-cex":
        C, K = k("C", 2.0), k("K", 1.0)
        r = hyp.cex_parameters(C, K)
        return _calc(cmd, {"C": C, "K": K}, r["eps"], "eps = 1/(100 (3C/(2K) + 1)^2)", details=r)
    if cmd == "calc-bers":
        g, C = k("g", 2), k("C", 1.0)
        return _calc(cmd, {"g": g, "C": C}, hyp.bers_sqrtg_bound(g, C), "46 C sqrt(g) log g")
    if cmd == "calc-bp09":
        g, C = k("g", 2), k("C", 1.0)
        r = hyp.bp09_bound(g, C)
        return _calc(cmd, {"g": g, "C": C}, r["value"],
                     "46 sqrt(2 pi (2g-2)) sqrt((C log g / 2 pi)^2 + 1)", details=r)
    if cmd == "calc-sum":
        g = int(k("g", 10))
        c1, c2 = k("c1", 1.0), k("c2", 1.0)
        r = hyp.sum_shortest_optimize(g, c1, c2)
        return _calc(cmd, {"g": g, "c1": c1, "c2": c2}, r["bound"],
                     "min over lambda of c1 k/(1-lambda) log(g+1)/sqrt(g) + c2 (g-k)", details=r)
    if cmd == "calc-group":
        b1 = int(k("b1", 4))
        c_low, c0, c = k("c_low", 1.0), k("c0", 1.0), k("c", 1.0)
        r = hyp.group_bounds(b1, c_low, c0, c, upper=b1 >= 1)
        return _calc(cmd, {"b1": b1, "c_low": c_low, "c0": c0, "c": c}, r["lower"],
                     "c (b1+1)/log(b1+2)^2 lower; c0 b1/log(b1)^2 upper", details=r)
    if cmd == "calc-kappa":
        n = int(k("n", 4))
        return _calc(cmd, {"n": n}, kappa(n), "floor(log2 n) + 1")
    if cmd == "calc-theorem":
        g, kk, ell = int(k("g", 2)), int(k("k", 1)), cfg.ell if cfg.ell is not None else 1.0
        c0 = k("C0", C0_NUMERATOR) / min(1.0, ell)
        from .nerve import theorem_bound
        return _calc(cmd, {"g": g, "k": kk, "ell": ell, "C0": c0}, theorem_bound(g, kk, ell, c0),
                     "C0 log(2g-k+2)/(2g-k+1) g")
    raise SyskitError("BAD_PARAMS", f"unknown calculator {cmd!r}")


def _graph(cmd, paths, cfg):
    if len(paths) != 1:
        raise SyskitError("BAD_PARAMS", "graph commands take one WGRAPH path")
    G = read_wgraph(paths[0])
    if cmd == "graph-systole":
        length, cyc = graph_systole(G)
        bound = bst_bound(G)
        return {"length": length, "cycle": {"vertices": list(cyc.vertices), "edges": list(cyc.edge_ids)},
                "betti": betti_number(G), "bst_bound": bound,
                "checks": [{"name": "sys <= 4 ln(1+b)/b len", "lhs": length, "rhs": bound,
                            "pass": length <= bound, "anchor": "graph systole vs total length"}]}
    b = betti_number(G)
    count = cfg.count if cfg.count is not None else b
    seq = greedy_systolic_sequence(G, count)
    active = set(range(G.n_edges))
    rows = []
    for k, (cyc, e) in enumerate(seq, start=1):
        bound = greedy_step_bound(b, k, G.total_length(active))
        rows.append({"k": k, "length": cyc.length, "removed_edge": e, "vertices": list(cyc.vertices),
                     "checks": [{"name": "len <= 4 ln(2+b-k)/(b-k+1) len(Gamma_k)", "lhs": cyc.length,
                                 "rhs": bound, "pass": cyc.length <= bound,
                                 "anchor": "greedy systolic sequence per-step bound"}]})
        active.discard(e)
    return {"betti": b, "count": count, "cycles": rows}


MESH_COMMANDS = {"short-loops": _short_loops, "homology-basis": _homology_basis,
                 "pants-reeb": _pants_reeb, "pants-sphere": _pants_sphere,
                 "pants-full": _pants_full, "pants-lift": _pants_lift}
CALCULATORS = ("calc-fat-torus", "calc-capacity", "calc-collar", "calc-logh", "calc-cex", "calc-bers",
               "calc-bp09", "calc-sum", "calc-group", "calc-kappa", "calc-theorem")
COMMANDS = tuple(MESH_COMMANDS) + ("hyp-fat-torus", "hyp-construct", "graph-systole", "graph-greedy") + CALCULATORS


def execute(command, paths, cfg):
    """One report as a dict plus (mesh, loops) for plotting."""
    if command in MESH_COMMANDS:
        M = _need_mesh(paths)
        log.info("%s on %s: V=%d F=%d genus=%d", command, paths[0], M.n_vertices, len(M.faces), M.genus)
        rep, extra = MESH_COMMANDS[command](cfg, M)
        if command.startswith("pants-"):
            return rep, extra.mesh, [list(w) for w in extra.loops]
        return rep, M, extra
    if command == "hyp-fat-torus":
        return _fat_torus(cfg), None, None
    if command == "hyp-construct":
        return _construct(cfg), None, None
    if command in ("graph-systole", "graph-greedy"):
        return _graph(command, paths, cfg), None, None
    if command in CALCULATORS:
        return _calculator(command, cfg), None, None
    raise SyskitError("BAD_PARAMS", f"unknown command {command!r}")


def _one(job):
    command, paths, cfg = job
    try:
        rep, _, _ = execute(command, paths, cfg)
        return rep
    except SyskitError as exc:
        return exc.as_dict()


def _write(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    cfg = RunConfig(args.ell, args.eps, args.count, args.target, args.seed, args.steiner, args.format,
                    args.out, args.height, _parse_consts(args.const))
    np.random.seed(cfg.seed % (2 ** 32))
    sweep = args.command in MESH_COMMANDS and len(args.paths) > 1
    try:
        if sweep:
            jobs = [(args.command, [p], cfg) for p in args.paths]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    runs = list(pool.map(_one, jobs))
            else:
                runs = [_one(j) for j in jobs]
            report = {"command": args.command, "config": cfg.echo(),
                      "runs": [dict(r, path=p) for r, p in zip(runs, args.paths)]}
            mesh = loops = None
        else:
            rep, mesh, loops = execute(args.command, args.paths, cfg)
            report = dict(rep, command=args.command, config=cfg.echo())
    except SyskitError as exc:
        log.error("%s", exc)
        _write(to_json(exc.as_dict()), cfg.out)
        return EXIT_ERROR
    if cfg.out:
        report["figures"] = render_figures(args.command, report, cfg.out, mesh, loops)
    failures = failed_checks(report)
    errors = [r for r in report.get("runs", []) if "error" in r]
    report["audit_failures"] = failures
    _write(to_csv(report) if cfg.fmt == "csv" else to_json(report), cfg.out)
    if errors:
        return EXIT_ERROR
    return EXIT_AUDIT if failures else EXIT_OK


def _parse_consts(items):
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise SyskitError("BAD_PARAMS", f"--const expects NAME=VALUE, got {item!r}")
        try:
            float(value)
        except ValueError:
            raise SyskitError("BAD_PARAMS", f"--const {name} is not a number") from None
        out[name] = value
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="syskit", description="Short loops and pants decompositions on triangle meshes.")
    sub = p.add_subparsers(dest="action", required=True)
    g = sub.add_parser("gen", help="write a fixture mesh")
    g.add_argument("kind")
    g.add_argument("params", nargs="*")
    g.add_argument("--marks", type=int, default=0, help="add farthest-point marks")
    g.add_argument("--jitter", type=float, default=0.0, help="relative edge-length jitter")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    r = sub.add_parser("run", help="run a pipeline or calculator")
    r.add_argument("command", choices=COMMANDS)
    r.add_argument("paths", nargs="*")
    r.add_argument("--ell", type=float)
    r.add_argument("--eps")
    r.add_argument("--count", type=int)
    r.add_argument("--target", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--steiner", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--out")
    r.add_argument("--height", choices=("x", "y", "z", "index"), default="z",
                   help="height function for the Reeb sweep")
    r.add_argument("--const", action="append", metavar="NAME=VALUE")
    return p


def main(argv=None):
    level = os.environ.get("SYSKIT_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.action == "gen":
            return cmd_gen(args)
        return cmd_run(args)
    except SyskitError as exc:
        sys.stdout.write(to_json(exc.as_dict()))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

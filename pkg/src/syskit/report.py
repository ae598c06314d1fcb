"""Deterministic JSON/CSV serialization of reports and matplotlib figures."""
from __future__ import annotations

import json
import math
import os

import numpy as np


def _plain(obj):
    """Convert numpy scalars/arrays, tuples and sets into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [_plain(v) for v in sorted(obj)]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _num(x, digits):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, f".{digits}g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, str)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj, 17)
    return json.dumps(obj)


def to_json(report) -> str:
    """Sorted keys, floats with 17 significant digits, trailing newline."""
    return _encode(_plain(report), 2, 0) + "\n"


def _cell(v):
    if isinstance(v, float):
        return _num(v, 12).strip('"')
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s


def _flatten(obj, prefix, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(obj[k], f"{prefix}.{k}" if prefix else k, rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(v, f"{prefix}.{i}", rows)
    else:
        rows.append((prefix, obj))


def to_csv(report) -> str:
    """Calculators give one ``name,inputs...,value`` line; other reports flatten to key,value."""
    report = _plain(report)
    if "calculator" in report:
        cells = [report["calculator"]] + [f"{k}={_cell(v)}" for k, v in sorted(report["inputs"].items())]
        cells.append(_cell(report["value"]))
        return ",".join(cells) + "\n"
    rows = []
    _flatten(report, "", rows)
    return "key,value\n" + "".join(f"{_cell(k)},{_cell(v)}\n" for k, v in rows)


def failed_checks(report):
    """Names of every check with ``pass`` false, plus invalid decompositions."""
    out = []

    def walk(obj, path):
        if isinstance(obj, dict):
            if obj.get("pass") is False:
                out.append(obj.get("name", path))
            if obj.get("valid") is False:
                out.append(path + ".valid" if path else "valid")
            for k, v in obj.items():
                walk(v, f"{path}.{k}" if path else str(k))
        elif isinstance(obj, list):
            for i, v in enumerate(obj):
                walk(v, f"{path}.{i}")

    walk(_plain(report), "")
    return out


# ------------------------------------------------------------------ figures
def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams.update({"figure.dpi": 100, "font.size": 9, "axes.grid": True,
                         "grid.alpha": 0.3, "savefig.bbox": "tight"})
    return plt


def _save(plt, fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_loop_lengths(report, path, title):
    plt = _pyplot()
    loops = report.get("loops", [])
    fig, ax = plt.subplots(figsize=(5, 3))
    ks = [lp["k"] for lp in loops]
    ax.bar(ks, [lp["length"] for lp in loops], color="tab:blue", label="loop length")
    bounds = report.get("bounds")
    if bounds and all(b.get("bound") is not None for b in bounds):
        ax.plot([b["k"] for b in bounds], [b["bound"] for b in bounds], "r.--", label="bound")
        ax.set_yscale("log")
    ax.set_xlabel("loop")
    ax.set_ylabel("length")
    ax.set_title(title)
    ax.legend(loc="best")
    return _save(plt, fig, path)


def plot_mesh_loops(mesh, loops, path, title):
    """Loops drawn over the vertex cloud; skipped when the mesh has no coordinates."""
    if mesh is None or mesh.coords is None:
        return None
    plt = _pyplot()
    P = np.asarray(mesh.coords)
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="3d")
    ax.scatter(P[:, 0], P[:, 1], P[:, 2], s=1, c="0.7")
    cmap = plt.get_cmap("tab10")
    for i, w in enumerate(loops):
        cyc = list(w) + [w[0]]
        ax.plot(P[cyc, 0], P[cyc, 1], P[cyc, 2], color=cmap(i % 10), lw=1.5)
    ax.set_title(title)
    ax.set_box_aspect(np.maximum(np.ptp(P, axis=0), 1e-9))
    ax.set_axis_off()
    return _save(plt, fig, path)


def plot_checks(report, path, title):
    """lhs/rhs ratio of every audit inequality (below 1 means it holds)."""
    checks = []

    def walk(obj):
        if isinstance(obj, dict):
            if "lhs" in obj and "rhs" in obj and obj["rhs"]:
                checks.append(obj)
            for v in obj.values():
                walk(v)
        elif isinstance(obj, list):
            for v in obj:
                walk(v)

    walk(_plain(report))
    if not checks:
        return None
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.4 * len(checks)))
    ratios = [c["lhs"] / c["rhs"] for c in checks]
    ax.barh(range(len(checks)), ratios, color=["tab:green" if c.get("pass") else "tab:red" for c in checks])
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_yticks(range(len(checks)))
    ax.set_yticklabels([c.get("name", "") for c in checks])
    ax.set_xscale("log")
    ax.set_xlabel("lhs / rhs")
    ax.set_title(title)
    return _save(plt, fig, path)


def plot_fat_torus(path, eps_marker=None):
    from .hyperbolic import EPS_MAX, fat_torus
    plt = _pyplot()
    xs = np.linspace(EPS_MAX / 200, EPS_MAX, 200)
    vals = [fat_torus(float(x)) for x in xs]
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.plot(xs, [2 * v.a for v in vals], label="2a")
    ax.plot(xs, [2 * v.h for v in vals], label="2h")
    ax.plot(xs, xs, "k--", lw=0.8, label="eps")
    if eps_marker is not None:
        ax.axvline(eps_marker, color="r", lw=0.8)
    ax.set_xlabel("boundary length eps")
    ax.legend(loc="best")
    ax.set_title("fat torus")
    return _save(plt, fig, path)


def render_figures(command, report, out_path, mesh=None, loops=None):
    """Write the figures of a report next to ``out_path``; returns their file names."""
    stem, _ = os.path.splitext(out_path)
    made = []
    if command in ("short-loops", "homology-basis"):
        made.append(plot_loop_lengths(report, stem + "_lengths.png", command))
        made.append(plot_mesh_loops(mesh, loops or [], stem + "_loops.png", command))
    elif command.startswith("pants-"):
        made.append(plot_loop_lengths(report, stem + "_lengths.png", command))
        made.append(plot_mesh_loops(mesh, loops or [], stem + "_loops.png", command))
    elif command in ("hyp-fat-torus", "calc-fat-torus"):
        made.append(plot_fat_torus(stem + "_fat_torus.png", report.get("inputs", {}).get("eps")))
    made.append(plot_checks(report, stem + "_checks.png", command))
    return [os.path.basename(p) for p in made if p]

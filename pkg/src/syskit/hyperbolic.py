"""Hyperbolic trigonometry, building blocks of the handle construction, bound calculators.

Polygons are solved with lines in the hyperboloid model and bisection; the
closure of the finished boundary word is then certified independently by a
product of 2x2 matrices in SL(2, R).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SyskitError

TOL = 1e-9
EPS_MAX = 2 * math.asinh(1.0)
W0 = 0.5 * math.asinh(1.0)
REGULARITY_CONSTANT = 1.0 / 128.0

DEFAULT_CONSTANTS = {
    "C0": 2.0 ** 16,
    "C_lambda": 2.0 ** 18,
    "C": 2.0 ** 10,
    "C_prime": 2.0 ** 7,
}


# ------------------------------------------------------------------ fat torus
@dataclass(frozen=True)
class FatTorusParams:
    eps: float
    a: float
    h: float
    basis_longer: bool       # 2a > eps
    height_longer: bool      # 2h > 2a


def fat_torus(eps: float) -> FatTorusParams:
    """One-holed torus with boundary length eps built from right-angled pentagons."""
    if not (0 < eps <= EPS_MAX * (1 + 1e-15)):
        raise SyskitError("EPS_OUT_OF_RANGE", f"eps must lie in (0, 2 arcsinh 1], got {eps}")
    a = math.asinh(math.sqrt(math.cosh(eps / 4)))
    h = math.asinh(math.cosh(a) / math.sinh(eps / 2))
    return FatTorusParams(eps, a, h, 2 * a > eps, 2 * h > 2 * a)


def collar_theta0(w0: float = W0) -> float:
    return math.asin(1.0 / math.cosh(w0))


def collar_capacity_bound(length: float, w0: float = W0) -> float:
    """Capacity bound length / (pi - 2 theta0) of a collar of width w0."""
    if not length > 0:
        raise SyskitError("NONPOSITIVE_LENGTH", "loop length must be positive")
    return length / (math.pi - 2 * collar_theta0(w0))


def collar_width(boundary: float) -> float:
    """Width arcsinh(1/sinh(b/2)) of the standard collar of a geodesic of length b."""
    return math.asinh(1.0 / math.sinh(boundary / 2))


# --------------------------------------------------------- hyperboloid lines
_J = np.diag([1.0, 1.0, -1.0])
_O = np.array([0.0, 0.0, 1.0])
_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])


def _dot(u, v):
    return float(u[0] * v[0] + u[1] * v[1] - u[2] * v[2])


def _cross(u, v):
    return _J @ np.cross(u, v)


def _unit(u):
    q = _dot(u, u)
    if q > 0:
        return u / math.sqrt(q)
    p = u / math.sqrt(-q)
    return p if p[2] > 0 else -p


def _point_dist(p, q):
    # <p - q, p - q> = 4 sinh^2(d/2); avoids acosh near 1
    w = p - q
    return 2 * math.asinh(math.sqrt(max(0.0, _dot(w, w))) / 2)


def _geodesic(p, u, t):
    return p * math.cosh(t) + u * math.sinh(t)


def _line(p, u):
    """Unit normal of the geodesic through p with unit tangent u."""
    return _unit(_cross(p, u))


def _foot_pair(n1, n2):
    """Common perpendicular of two ultraparallel lines: feet on n1 and n2."""
    m = _unit(_cross(n1, n2))
    return _unit(_cross(m, n1)), _unit(_cross(m, n2))


@dataclass(frozen=True)
class _Half:
    d: float      # distance along the axis
    s: float      # length along the given side line up to its perpendicular
    x: float      # length of the common perpendicular
    half: float   # half of the far side


def _half_piece(P, uS, half_target):
    """Solve the far side perpendicular to the axis {x = 0}.

    The axis is the geodesic through the origin with tangent e_y.  A line
    perpendicular to the axis at height d and the common perpendicular with
    the side line (P, uS) enclose the half polygon; d is bisected so that the
    far side from the axis to that perpendicular has length ``half_target``.
    """
    nS = _line(P, uS)

    def far_line(d):
        Q = _geodesic(_O, _EY, d)
        return Q, _line(Q, _EX)

    def ultra(d):
        return abs(_dot(nS, far_line(d)[1])) > 1 + 1e-15

    def half_len(d):
        Q, nL = far_line(d)
        fl, fs = _foot_pair(nL, nS)
        return _point_dist(Q, fl), fl, fs

    # the far line first clears the side line somewhere above d_lo
    lo, hi = 0.0, 1.0
    while not ultra(hi):
        lo, hi = hi, 2 * hi
        if hi > 200:
            raise SyskitError("NO_SOLUTION", "side line never separates from the axis perpendiculars")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ultra(mid):
            hi = mid
        else:
            lo = mid
    d_asym = hi
    # half length blows up at the asymptote; back off until it is finite and large enough
    step = 1.0
    for _ in range(60):
        val = half_len(d_asym + step)[0]
        if math.isfinite(val) and val > half_target:
            break
        step /= 2
    else:
        raise SyskitError("NO_SOLUTION", "far side length not bracketed (too large)")
    d_lo = d_asym + step
    d_hi = d_lo + 1.0
    while half_len(d_hi)[0] > half_target:
        d_hi = d_lo + 2 * (d_hi - d_lo)
        if d_hi > 200:
            raise SyskitError("NO_SOLUTION", "far side length not bracketed (too small)")
    lo, hi = d_lo, d_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if half_len(mid)[0] > half_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    d = 0.5 * (lo + hi)
    half, fl, fs = half_len(d)
    return _Half(d, _point_dist(P, fs), _point_dist(fl, fs), half)


# ------------------------------------------------------------- SL(2,R) walk
def _translate(t):
    return np.array([[math.exp(t / 2), 0.0], [0.0, math.exp(-t / 2)]])


def _rotate(phi):
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]])


def closure_residual(sides, angles) -> float:
    """Distance of the boundary word to +-I.

    ``angles[i]`` is the interior angle between side i and side i+1.  The
    frame walks along each side and turns by the exterior angle.
    """
    W = np.eye(2)
    for s, a in zip(sides, angles):
        W = W @ _translate(s) @ _rotate(math.pi - a)
    return float(min(np.abs(W - np.eye(2)).max(), np.abs(W + np.eye(2)).max()))


def polygon_angles_from_sides(sides, angles_guess):
    """Recompute interior angles from sides and all but one angle via the walk."""
    n = len(sides)
    W = np.eye(2)
    for s, a in zip(sides[:-1], angles_guess[:-1]):
        W = W @ _translate(s) @ _rotate(math.pi - a)
    W = W @ _translate(sides[-1])
    # remaining turn R(pi - a_last) must bring W back to +-I
    M = np.linalg.inv(W)
    phi = 2 * math.atan2(M[1, 0], M[0, 0])
    a_last = (math.pi - phi) % (2 * math.pi)
    return list(angles_guess[:-1]) + [a_last if a_last <= math.pi else a_last - 2 * math.pi]


@dataclass(frozen=True)
class HypPolygon:
    kind: str
    sides: tuple
    angles: tuple
    residual: float
    extra: dict = field(default_factory=dict)


def _check_ell(ell):
    if not ell > 0 or not math.cosh(ell) > 7:
        raise SyskitError("BAD_ELL", f"need cosh(ell) > 7, got cosh({ell}) = {math.cosh(ell) if ell < 700 else math.inf}")


def _word(sides, angles):
    W = np.eye(2)
    for s, a in zip(sides, angles):
        W = W @ _translate(s) @ _rotate(math.pi - a)
    return W


def _polish(build, params, angles, steps=8):
    """Gauss-Newton on the boundary word over the free side lengths.

    ``build(params)`` returns the side list.  The bisection result is already
    close; this removes the rounding picked up in the hyperboloid frames.
    """
    params = list(params)
    sign = 1.0 if np.abs(_word(build(params), angles) - np.eye(2)).max() < 1 else -1.0

    def F(p):
        return (_word(build(p), angles) - sign * np.eye(2)).ravel()

    best = (np.abs(F(params)).max(), params)
    for _ in range(steps):
        f0 = F(params)
        J = np.empty((4, len(params)))
        for i in range(len(params)):
            h = 1e-7 * max(1.0, abs(params[i]))
            q = list(params)
            q[i] += h
            J[:, i] = (F(q) - f0) / h
        delta = np.linalg.lstsq(J, -f0, rcond=None)[0]
        params = [a + float(b) for a, b in zip(params, delta)]
        r = np.abs(F(params)).max()
        if r < best[0]:
            best = (r, params)
        else:
            break
    return best[1]


def _finish(kind, sides, angles, extra=None):
    res = closure_residual(sides, angles)
    if not res < TOL:
        raise SyskitError("NO_SOLUTION", f"{kind}: closure residual {res:.3g} exceeds {TOL}")
    return HypPolygon(kind, tuple(sides), tuple(angles), res, extra or {})


def solve_hexagon(theta: float, ell: float, L: float) -> HypPolygon:
    """Symmetric hexagon: base ell with angles theta, far side L, other angles right."""
    _check_ell(ell)
    if not L > 0:
        raise SyskitError("NO_SOLUTION", "far side must be positive")
    if not 0 < theta < math.pi / 2:
        raise SyskitError("BAD_PARAMS", "base angle must lie in (0, pi/2)")
    P = _geodesic(_O, _EX, ell / 2)
    back = -(_O * math.sinh(ell / 2) + _EX * math.cosh(ell / 2))
    uS = math.cos(theta) * back + math.sin(theta) * _EY
    hp = _half_piece(P, uS, L / 2)
    R = math.pi / 2
    angles = [theta, R, R, R, R, theta]

    def build(p):
        return [ell, p[0], p[1], L, p[1], p[0]]

    side, short = _polish(build, [hp.s, hp.x], angles)
    tag = {math.pi / 6: "H_pi/6", math.pi / 3: "H_pi/3"}.get(theta, "H_theta")
    return _finish(tag, build([side, short]), angles, {"axis": hp.d, "side": side, "short": short})


def solve_right_hexagon(L: float) -> HypPolygon:
    """Right-angled hexagon with three alternate sides of length L.

    The short side y solves |tr(T(L) R(pi/2) T(y) R(pi/2))| = 1 (a third of
    a full turn) by bisection.
    """
    if not L > 0:
        raise SyskitError("NO_SOLUTION", "side must be positive")
    Rq = _rotate(math.pi / 2)

    def f(y):
        return abs(np.trace(_translate(L) @ Rq @ _translate(y) @ Rq)) - 1.0

    lo, hi = 0.0, 1.0
    if not f(lo) < 0:
        raise SyskitError("NO_SOLUTION", "right hexagon not bracketed")
    while f(hi) < 0:
        hi *= 2
        if hi > 200:
            raise SyskitError("NO_SOLUTION", "right hexagon not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    R = math.pi / 2
    return _finish("H_L", [L, y] * 3, [R] * 6, {"short": y})


def solve_pentagon_P(Lp: float) -> HypPolygon:
    """Symmetric pentagon with apex angle 2 pi/7, far side Lp, other angles right."""
    if not Lp > 0:
        raise SyskitError("NO_SOLUTION", "far side must be positive")
    half_apex = math.pi / 7
    uS = math.cos(half_apex) * _EY + math.sin(half_apex) * _EX
    # the side line leaves the apex (origin) at angle pi/7 from the axis
    hp = _half_piece(_O, uS, Lp / 2)
    R = math.pi / 2
    angles = [R, R, R, R, 2 * math.pi / 7]

    def build(p):
        return [p[0], p[1], Lp, p[1], p[0]]

    side, short = _polish(build, [hp.s, hp.x], angles)
    return _finish("P_L'", build([side, short]), angles, {"axis": hp.d, "side": side, "short": short})


def solve_right_pentagon(a: float, b: float) -> HypPolygon:
    """Right-angled pentagon from two adjacent sides a, b.

    The side opposite to their common vertex has cosh c = sinh a sinh b; the
    construction degenerates when sinh a sinh b <= 1.
    """
    if not (a > 0 and b > 0):
        raise SyskitError("NO_SOLUTION", "sides must be positive")
    prod = math.sinh(a) * math.sinh(b)
    if prod <= 1 + 1e-12:
        raise SyskitError("NO_SOLUTION", "sinh(a) sinh(b) <= 1: degenerate right-angled pentagon")
    c = math.acosh(prod)
    # the sides next to c satisfy cosh a = sinh f sinh c and cosh b = sinh e sinh c
    e = math.asinh(math.cosh(b) / math.sqrt(prod * prod - 1))
    f_ = math.asinh(math.cosh(a) / math.sqrt(prod * prod - 1))
    # cyclic order a, b, e, c, f  (c opposite the a-b corner)
    R = math.pi / 2
    return _finish("right-pentagon", [a, b, f_, c, e], [R] * 5, {})


@dataclass(frozen=True)
class HoledPiece:
    kind: str
    ell: float
    L: float
    boundary: float
    collar: float
    parts: tuple


def assemble_X3(L: float, ell: float) -> HoledPiece:
    """Three-holed triangle: three H_{pi/6,L} glued to H_L along the L sides.

    Each hole is the short side of H_L flanked by the short sides of the two
    neighbouring hexagons.
    """
    H = solve_hexagon(math.pi / 6, ell, L)
    HL = solve_right_hexagon(L)
    b = 2 * H.extra["short"] + HL.extra["short"]
    return HoledPiece("X3", ell, L, b, collar_width(b), (H, HL))


def assemble_X7(Lp: float, ell: float) -> HoledPiece:
    """Seven-holed heptagon: seven P_{L'} around the apex, seven H_{pi/3,L'} outside.

    The pentagons form a right-angled 14-gon whose short sides are pairs of
    pentagon sides; each hole adds the short sides of two hexagons.
    """
    P = solve_pentagon_P(Lp)
    H = solve_hexagon(math.pi / 3, ell, Lp)
    b = 2 * H.extra["short"] + 2 * P.extra["short"]
    return HoledPiece("X7", ell, Lp, b, collar_width(b), (P, H))


def find_L_for_collar(tau: float, ell: float, kind: str = "X3") -> HoledPiece:
    """Smallest far-side length (to 1e-9) whose holes carry collars of width >= tau."""
    build = {"X3": assemble_X3, "X7": assemble_X7}.get(kind)
    if build is None:
        raise SyskitError("BAD_PARAMS", f"unknown piece {kind!r}")
    if not tau > 0:
        raise SyskitError("BAD_PARAMS", "collar width must be positive")
    _check_ell(ell)
    target = 2 * math.asinh(1.0 / math.sinh(tau))
    lo, hi = 0.0, 1.0
    while build(hi, ell).boundary > target:
        lo, hi = hi, 2 * hi
        if hi > 100:
            raise SyskitError("NO_SOLUTION", f"collar width {tau} out of numerical range")
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if mid > 0 and build(mid, ell).boundary <= target:
            hi = mid
        else:
            lo = mid
    return build(hi, ell)


# ---------------------------------------------------------- handle surfaces
@dataclass(frozen=True)
class ConstructionPlan:
    h: int
    m: int
    ell: float
    paper: dict
    euler: dict
    consistent: bool
    genus_formula: int
    k_formula: int
    triangle_area: float


def _assembly(F, V, m):
    """Counts for a base triangulation (F faces, V vertices) subdivided m times."""
    E = 3 * F // 2 if (3 * F) % 2 == 0 else 3 * F / 2
    Fs = F * m * m
    Vs = V + E * (m - 1) + F * (m - 1) * (m - 2) // 2
    Es = 3 * Fs / 2
    chi_base = V - E + F
    x7 = V
    x3 = Fs - 7 * V
    holes = 3 * x3 + 7 * x7
    chi_holed = chi_base - holes
    genus = 1 - chi_holed / 2
    return {"faces": F, "vertices": V, "edges": E, "chi": chi_base,
            "sub_faces": Fs, "sub_vertices": Vs, "sub_edges": Es,
            "X3": x3, "X7": x7, "boundary_components": holes, "glued_pairs": holes / 2,
            "chi_closed": chi_holed, "genus": genus,
            "chi_even": float(chi_base).is_integer() and int(chi_base) % 2 == 0}


def construction_plan(h: int, m: int, ell: float) -> ConstructionPlan:
    """Counts for the surface built from a (2,3,7) triangulation by adding handles.

    Both the literal triangle and vertex counts and the Euler-consistent ones
    for pi/7-area triangles are assembled; the genus of each comes from
    chi of the holed complex, and ``consistent`` says whether the literal
    counts reproduce chi = 2 - 2h.
    """
    if not (isinstance(h, int) and isinstance(m, int)) or h < 2 or m < 2:
        raise SyskitError("BAD_PARAMS", "need integers h >= 2 and m >= 2")
    if not ell > 0 or not math.cosh(ell) > 7:
        raise SyskitError("BAD_PARAMS", "need cosh(ell) > 7")
    paper = _assembly(14 * (h - 1), 6 * (h - 1), m)
    euler = _assembly(28 * (h - 1), 12 * (h - 1), m)
    return ConstructionPlan(h, m, ell, paper, euler, paper["chi"] == 2 - 2 * h,
                            h + 21 * (h - 1) * (m * m - 2), 21 * (h - 1) * (m * m - 2),
                            math.pi - 3 * (2 * math.pi / 7))


def logh_bound(h: float, m: float, K: float) -> float:
    if not (h >= 2 and m >= 1 and 0 < K < 1):
        raise SyskitError("BAD_PARAMS", "need h >= 2, m >= 1 and 0 < K < 1")
    return 4.0 / 3.0 * K * m * math.log(h)


def logh_value(h, m, K):
    """(4/3) K m log h without the range check on K (used for K = 1 sanity values)."""
    return 4.0 / 3.0 * K * m * math.log(h)


def cex_parameters(C: float, K: float = 1.0):
    """Largest admissible eps and the subdivision m for a target constant C > 1."""
    if not C > 1:
        raise SyskitError("BAD_C", "C must exceed 1")
    if not K > 0:
        raise SyskitError("BAD_PARAMS", "K must be positive")
    base = 3 * C / (2 * K) + 1
    eps = 1.0 / (100 * base * base)
    raw = 1.0 / (10 * math.sqrt(eps))
    m = int(round(raw)) if abs(raw - round(raw)) < 1e-9 else math.floor(raw)
    checks = {"eps_small": eps <= 1 / 100, "m_large": m >= 3 * C / (2 * K),
              "eps_m2_small": eps * m * m <= 1 / 100 * (1 + 1e-12)}
    return {"C": C, "K": K, "eps": eps, "m": m, "h_min": 21 * (m * m - 2),
            "h_rule": "h >= max(21 (m^2 - 2), g0)", "checks": checks, "ok": all(checks.values())}


def bp09_bound(g: float, C: float = 1.0):
    """Pants length bound for a sphere with 2g short boundaries, and its simplification."""
    if not (g >= 2 and C > 0):
        raise SyskitError("BAD_PARAMS", "need g >= 2 and C > 0")
    val = 46 * math.sqrt(2 * math.pi * (2 * g - 2)) * math.sqrt((C * math.log(g) / (2 * math.pi)) ** 2 + 1)
    simple = bers_sqrtg_bound(g, C)
    return {"value": val, "simplified": simple, "simplification_holds": val <= simple}


def bers_sqrtg_bound(g: float, C: float = 1.0) -> float:
    if not (g >= 2 and C > 0):
        raise SyskitError("BAD_PARAMS", "need g >= 2 and C > 0")
    return 46 * C * math.sqrt(g) * math.log(g)


def _sum_objective(lam, g, c1, c2):
    k = math.floor(lam * g)
    return c1 * k / (1 - lam) * math.log(g + 1) / math.sqrt(g) + c2 * (g - k)


def sum_shortest_optimize(g: int, c1: float = 1.0, c2: float = 1.0, tol: float = 1e-6):
    """Golden-section search for the split lambda of the sum-of-lengths bound."""
    if not (g >= 2 and c1 > 0 and c2 > 0):
        raise SyskitError("BAD_PARAMS", "need g >= 2 and positive constants")
    inv = (math.sqrt(5) - 1) / 2
    a, b = 0.0, 1.0 - 1e-12
    x1, x2 = b - inv * (b - a), a + inv * (b - a)
    f1, f2 = _sum_objective(x1, g, c1, c2), _sum_objective(x2, g, c1, c2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = _sum_objective(x1, g, c1, c2)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = _sum_objective(x2, g, c1, c2)
    lam = 0.5 * (a + b)
    val = _sum_objective(lam, g, c1, c2)
    return {"g": g, "lambda": lam, "bound": val,
            "ratio": val / (g ** 0.75 * math.sqrt(math.log(g)))}


def group_bounds(b1: int, c_low: float = 1.0, c0: float = 1.0, c: float = 1.0, upper: bool = True):
    """Lower bound on systolic area and the even/odd upper-bound examples."""
    if not (isinstance(b1, int) and b1 >= 0 and c_low > 0 and c0 > 0 and c > 0):
        raise SyskitError("BAD_PARAMS", "need integer b1 >= 0 and positive constants")
    if upper and b1 < 1:
        raise SyskitError("BAD_PARAMS", "upper bounds need b1 >= 1")
    lower = c_low * (b1 + 1) / math.log(b1 + 2) ** 2
    out = {"b1": b1, "lower": lower, "upper_even": None, "odd_record": None,
           "regularity_constant": REGULARITY_CONSTANT}
    if b1 % 2 == 0 and b1 >= 4:
        out["upper_even"] = c0 * b1 / math.log(b1) ** 2
    if b1 % 2 == 1 and b1 >= 5:
        g = (b1 - 1) // 2
        sys_ = c / 4 * math.log(g)
        area = 4 * math.pi * (g - 1) + c * c / 4 * math.log(g) ** 2
        ratio = area / sys_ ** 2
        cap = c0 * b1 / math.log(b1) ** 2
        out["odd_record"] = {"g": g, "sys": sys_, "area": area, "ratio": ratio, "cap": cap,
                             "within_cap": ratio <= cap, "c0_needed": ratio / (b1 / math.log(b1) ** 2)}
    return out


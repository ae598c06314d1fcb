"""Regenerate tests/golden/hyperbolic_constants.json with mpmath at 50 digits.

This is the reference for the fat torus and collar constants.  It uses only
mpmath so that it shares no code path with syskit.hyperbolic.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50


def fat_torus(eps):
    a = mp.asinh(mp.sqrt(mp.cosh(eps / 4)))
    h = mp.asinh(mp.cosh(a) / mp.sinh(eps / 2))
    return a, h


def main():
    eps_max = 2 * mp.asinh(1)
    a, h = fat_torus(eps_max)
    w0 = mp.asinh(1) / 2
    theta0 = mp.asin(1 / mp.cosh(w0))
    out = {
        "eps_max": mp.nstr(eps_max, 30),
        "a_at_eps_max": mp.nstr(a, 30),
        "h_at_eps_max": mp.nstr(h, 30),
        "sinh_half_eps_max": mp.nstr(mp.sinh(eps_max / 2), 30),
        "w0": mp.nstr(w0, 30),
        "cosh_w0": mp.nstr(mp.cosh(w0), 30),
        "theta0": mp.nstr(theta0, 30),
        "pi_minus_2theta0": mp.nstr(mp.pi - 2 * theta0, 30),
        "samples": [],
    }
    for eps in (mp.mpf("0.01"), mp.mpf("0.5"), mp.mpf("1"), mp.mpf("1.5")):
        a, h = fat_torus(eps)
        out["samples"].append({"eps": mp.nstr(eps, 30), "a": mp.nstr(a, 30), "h": mp.nstr(h, 30)})
    path = Path(__file__).resolve().parent.parent / "golden" / "hyperbolic_constants.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(path)


if __name__ == "__main__":
    main()

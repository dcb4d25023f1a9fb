"""Regenerate tests/data/golden.json with an independent 40-digit oracle.

Homogenized eigenvalues come from the closed-form determinant of the
constant-coefficient problem; the eigenvalue ratios (tau_eps - tau0)/eps for the
piecewise {2, 4} profile come from an mpmath transfer-matrix product at
delta = 0.5, extrapolated to eps -> 0 by a quadratic least-squares fit.
Run: python tests/oracles/make_golden.py
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 40
OUT = Path(__file__).resolve().parents[1] / "data" / "golden.json"


def det_homog(nb, t):
    mu, la = mp.sqrt(nb * t), mp.sqrt(t)
    return (mp.cos(mu) - mp.cos(la)) ** 2 + (mu * mp.sin(mu) - la * mp.sin(la)) * (mp.sin(mu) / mu - mp.sin(la) / la)


def homog_roots(nb, lo, hi, step=1e-3):
    ts = np.arange(lo, hi + 1e-9, step)
    mu, la = np.sqrt(nb * ts), np.sqrt(ts)
    v = (np.cos(mu) - np.cos(la)) ** 2 + (mu * np.sin(mu) - la * np.sin(la)) * (np.sin(mu) / mu - np.sin(la) / la)
    idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
    nb = mp.mpf(nb)
    return [float(mp.findroot(lambda t: det_homog(nb, t), (mp.mpf(ts[k]), mp.mpf(ts[k + 1])), solver="anderson"))
            for k in idx]


def prop(k2, length):
    k = mp.sqrt(k2)
    return mp.matrix([[mp.cos(k * length), mp.sin(k * length) / k], [-k * mp.sin(k * length), mp.cos(k * length)]])


def det_eps(t, n_cells, delta):
    eps = 1 / (mp.mpf(n_cells) + delta)
    cell = prop(4 * t, eps / 2) * prop(2 * t, eps / 2)
    tail = prop(2 * t, eps * min(delta, mp.mpf(0.5)))
    if delta > 0.5:
        tail = prop(4 * t, eps * (delta - 0.5)) * tail
    return mp.det(tail * cell**n_cells - prop(t, 1))


def main():
    out = {
        "homog_roots": {
            "2": homog_roots(2.0, 1.0, 300.0),
            "2.5": homog_roots(2.5, 1.0, 200.0),
            "3": homog_roots(3.0, 1.0, 200.0),
        }
    }
    tau0 = mp.findroot(lambda t: det_homog(3, t), out["homog_roots"]["3"][0])
    delta = mp.mpf(0.5)
    ratios = []
    for n in (128, 256, 512, 1024, 2048):
        eps = 1 / (mp.mpf(n) + delta)
        te = mp.findroot(lambda t: det_eps(t, n, delta), tau0 + 30 * eps)
        ratios.append((float(eps), float((te - tau0) / eps)))
    e = np.array([r[0] for r in ratios])
    s = np.array([r[1] for r in ratios])
    coef = np.linalg.lstsq(np.vstack([np.ones_like(e), e, e**2]).T, s, rcond=None)[0]
    out["piecewise24_delta05"] = {"tau0": float(tau0), "ratios": ratios, "tau1": float(coef[0])}
    OUT.write_text(json.dumps(out, indent=1) + "\n")
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()

"""Freeze arbitrary-precision reference values into ../data/oracles.json.

Run from this directory:  python3 gen_oracles.py
"""
import json
import random

import mpmath as mp

from besselk_mp import log_k, log_k_integral, log_k_half_integer


def log_green(d, sigma, r):
    d = mp.mpf(d)
    sigma = mp.mpf(sigma)
    r = mp.mpf(r)
    nu = (d - 2) / 2
    z = mp.sqrt(2) * r / sigma
    return (-(d / 2) * mp.log(2 * mp.pi) + mp.log(2 / sigma**2)
            + nu * mp.log(mp.sqrt(2) / (sigma * r)) + log_k(nu, z))


def f(x):
    return float(x)


def main():
    rng = random.Random(20240611)
    out = {}

    pairs = [(500, 10), (0, 1), (199, 1), (1, 1), (0.5, 1), (1.5, 2), (2000, 1), (50, 40)]
    for _ in range(50):
        nu = rng.randint(0, 20000) / 2
        z = 10 ** rng.uniform(-8, 5)
        z = float(f"{z:.6e}")
        pairs.append((nu, z))
    logk = []
    for nu, z in pairs:
        a = log_k(nu, z)
        b = log_k(mp.mpf(nu) + 1, z)
        # half-integer rows are checked against the integral route as well
        if (2 * mp.mpf(nu)) % 2 == 1 and nu < 3000:
            alt = log_k_integral(nu, z)
            assert abs(alt - a) <= mp.mpf("1e-20") * max(1, abs(a)), (nu, z)
        logk.append({"nu": nu, "z": z, "log_k": f(a), "ratio": f(mp.exp(b - a))})
    out["log_k"] = logk

    out["log_green_d100_s05_r1"] = f(log_green(100, 0.5, 1))
    out["log_green_d3_s1"] = [
        {"r": r, "log_g": f(log_green(3, 1, r))} for r in (0.01, 0.5, 1.0, 3.0, 20.0)
    ]
    out["log_weight_ratio_d50_r1_r2"] = f(log_green(50, 1, 1) - log_green(50, 1, 2))

    fixtures = []
    for _ in range(20):
        d = rng.randint(3, 10)
        n = rng.randint(1, 10)
        sigma = round(rng.uniform(0.5, 2.0), 3)
        atoms = [[round(rng.uniform(-2, 2), 4) for _ in range(d)] for _ in range(n)]
        y = [round(rng.uniform(-2, 2), 4) for _ in range(d)]
        logs = []
        for a in atoms:
            r = mp.sqrt(sum((mp.mpf(ai) - mp.mpf(yi)) ** 2 for ai, yi in zip(a, y)))
            logs.append(log_green(d, sigma, r))
        m = max(logs)
        total = m + mp.log(sum(mp.exp(l - m) for l in logs))
        fixtures.append({
            "dim": d, "sigma": sigma, "atoms": atoms, "y": y,
            "weights": [f(mp.exp(l - total)) for l in logs],
        })
    out["posterior_fixtures"] = fixtures

    out["certificate_rhs_d100"] = f(1 - 10 * mp.mpf("1.1") ** (-98))
    out["certificate_offmass_bound_d200"] = f(10 * mp.mpf("1.1") ** (-198))

    with open("../data/oracles.json", "w") as fh:
        json.dump(out, fh, indent=1)


if __name__ == "__main__":
    main()

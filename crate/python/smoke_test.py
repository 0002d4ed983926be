"""Smoke test for the torus_cascade extension module.

Build and place the module next to this file first:

    cargo build --release -p torus-cascade-py --features extension-module
    cp target/release/libtorus_cascade_py.so python/torus_cascade.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import torus_cascade as tc


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL {msg}")
    print(f"ok   {msg}")


def main():
    grid = tc.Grid(64)
    check(grid.n == 64 and abs(grid.length - 2 * math.pi) < 1e-15, "grid defaults to the 2pi torus")

    n = grid.n
    h = grid.length / n
    vals = [math.cos(i * h) * math.sin(2 * j * h) for i in range(n) for j in range(n)]
    f = tc.Field.from_values(grid, vals)
    back = f.values()
    check(max(abs(a - b) for a, b in zip(vals, back)) < 1e-13, "values round-trip through the spectrum")

    w = tc.power_law_field(tc.Grid(256), 1.5, seed=7)
    check(abs(tc.tail_exponent(w) - 1.5) < 0.1, "power-law data has the requested tail exponent")

    u = tc.power_law_field(grid, 1.0, seed=1)
    v = tc.power_law_field(grid, 2.0, seed=2)
    parts = tc.paraproduct(u, v) + tc.paraproduct(v, u) + tc.remainder(u, v)
    full = tc.product(u, v)
    check((parts - full).l2_norm() <= 1e-12 * full.l2_norm(), "paraproducts and remainder rebuild the product")

    check(tc.adapted_norm(w, w) > 0.0, "adapted norm of the reference is positive")
    total = f.block(0)
    for k in range(1, 7):
        total = total + f.block(k)
    check((total - f).l2_norm() <= 1e-12 * f.l2_norm(), "dyadic blocks sum back to the field")

    before = tc.invariants(u)
    after = tc.invariants(tc.evolve_field(u, 0.05, dt=1e-3))
    drift = abs(after["energy"] - before["energy"]) / before["energy"]
    check(drift < 1e-8, f"Euler step conserves energy (drift {drift:.1e})")

    blob = tc.encode_pcf1_bytes(f)
    check(blob[:4] == b"PCF1" and len(blob) == 16 + 8 * n * n, "PCF1 layout")
    check((tc.decode_pcf1_bytes(blob) - f).l2_norm() < 1e-14, "PCF1 round-trip")

    cfg = tc.RunConfig("quick")
    cfg.set("solver.t_end", "0.2")
    with tempfile.TemporaryDirectory() as d:
        cfg.set_outdir(d)
        passed, text = tc.run_experiment(cfg)
        check("residual_slope" in text and os.path.exists(os.path.join(d, "pairing.csv")), "quick experiment writes its artifacts")
    try:
        cfg.set("solver.alpha", "x")
        check(False, "bad config value raises")
    except ValueError as e:
        check("solver.alpha" in str(e), "bad config value raises with the key name")

    passed, text = tc.verify("appendix-a")
    check(passed, "appendix-a suite passes")
    print("smoke test passed")


if __name__ == "__main__":
    main()

"""Compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]``.
Each case is timed on both backends (best of ``--repeat``) and the outputs
are compared, so a speedup is only reported for results that agree.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from koopman_attractors.kernels import implementations


def _annulus_start(n, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(1.0, 2.0, n)
    return np.log(r), rng.uniform(0.0, 2 * np.pi, n)


def case_advance(impl, n=2000, steps=2000):
    u, th = _annulus_start(n)
    impl.hilmy_advance(u, th, 0.01, steps)
    return np.concatenate([u, th])


def case_tail(impl, n=200, n_burn=200, n_tail=2000):
    u, th = _annulus_start(n, seed=1)
    owner, pts, w = impl.hilmy_tail_atoms(u, th, 0.01, 1, n_burn, n_tail, 0.0025)
    return np.concatenate([np.asarray(owner, float), np.ravel(pts), w])


def case_net(impl, n=20000):
    pts = np.random.default_rng(2).uniform(-1, 1, (n, 2))
    return np.asarray(impl.greedy_net(pts, 0.02), float)


def case_decimate(impl, n=200000):
    t = np.linspace(0, 50, n)
    pts = np.ascontiguousarray(np.column_stack([np.cos(t), np.sin(t)]))
    idx, w = impl.decimate(pts, np.full(n, 1.0 / n), 0.01)
    return np.concatenate([np.asarray(idx, float), w])


CASES = {
    "hilmy_advance (2000 orbits x 2000 RK4 steps)": case_advance,
    "hilmy_tail_atoms (200 orbits, 2200 steps)": case_tail,
    "greedy_net (20000 points, r=0.02)": case_net,
    "decimate (200000 samples, r=0.01)": case_decimate,
}


def _best(fn, impl, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(impl)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    impls = implementations()
    if "compiled" not in impls:
        print("compiled kernels are not built; only the fallback is timed")
    rows = []
    for name, fn in CASES.items():
        row = {"case": name}
        outs = {}
        for backend, impl in impls.items():
            row[backend], outs[backend] = _best(fn, impl, args.repeat)
        if "compiled" in outs:
            a, b = outs["python"], outs["compiled"]
            row["agree"] = bool(a.shape == b.shape and np.allclose(a, b, rtol=1e-9, atol=1e-12))
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'python s':>9}  {'compiled s':>10}  {'speedup':>7}  agree")
    for r in rows:
        comp = f"{r['compiled']:10.4f}" if "compiled" in r else f"{'-':>10}"
        sp = f"{r['speedup']:7.1f}" if "speedup" in r else f"{'-':>7}"
        print(f"{r['case']:<{width}}  {r['python']:9.4f}  {comp}  {sp}  {r.get('agree', '-')}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r.get("agree", True) for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Compiled kernels against their numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel rows are timed in this process (both implementations are importable
side by side).  End-to-end rows run a fresh interpreter per mode so that
``ROTVEC_NUMBA`` takes effect; they include import and cache-load time.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from rotvec import USE_NUMBA
from rotvec import _gamma, _models, quadrature
from rotvec._accel import force_jit
from rotvec.field import ModelSpec, make_model
from rotvec.solver import NormalizedField, grid_intervals


def best_of(fn, repeat):
    fn()  # warm-up (compilation, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_rows(repeat):
    rng = np.random.default_rng(0)
    rows = []

    y = rng.normal(size=1_000_001)
    out = np.empty_like(y)
    loop = force_jit(quadrature._cumsimpson_loop)
    rows.append(("cumulative simpson, 1e6 nodes",
                 best_of(lambda: loop(y, 1e-3, out), repeat),
                 best_of(lambda: quadrature._cumsimpson_np(y, 1e-3), repeat)))

    torus = make_model(ModelSpec("torus", {"c": [2.0, 3.0, 2.5], "eps": [0.1, 0.2, 0.3]}))
    mp = torus.packed
    m = 100_000
    xs = rng.uniform(0, 1, (m, 3))
    xt = np.ascontiguousarray(xs.T)
    ft = np.empty_like(xt)
    block = force_jit(_models.model_f_block)
    rows.append(("torus field, 1e5 points",
                 best_of(lambda: block(mp, xt, ft, m), repeat),
                 best_of(lambda: _models.model_f_np(mp, xs), repeat)))

    if USE_NUMBA:
        for name, spec in (("circle", ModelSpec("circle", {"c": 2.0, "eps": 0.1})),
                           ("winfree", ModelSpec("winfree", {"omega": [1.0, 1.3], "kappa": 0.2}))):
            field = make_model(spec)
            g = NormalizedField(field, np.zeros(field.dim), 4.0, 0.05)
            z = g.from_rotation(np.full(field.dim, 1.5))
            k = 2000.0
            n = grid_intervals(g, z, k)
            line = g.line(z, 1.0)
            args = (field.packed, g.c, g.gamma, np.zeros(field.dim), line.vel, line.weights,
                    1.0, k, n)
            rows.append((f"gamma sums, {name}, {n} intervals",
                         best_of(lambda: _gamma.gamma_sums_loop(*args), repeat),
                         best_of(lambda: _gamma.gamma_sums_np(line, 1.0, k, n), repeat)))
    return rows


E2E = {
    "circle flow to t=1e3": (
        "import numpy as np, rotvec.flow as F, rotvec.field as M;"
        "f=M.make_model(M.ModelSpec('circle',{'c':2.0,'eps':1.0}));"
        "F.integrate(f,np.zeros(1),(0.0,1e3))"),
    "constant-field solve": (
        "import rotvec.solver as S, rotvec.field as M;"
        "S.solve_rotation_formula(M.make_model(M.ModelSpec('constant',{'omega':[0.5,2.0]})))"),
}


def e2e_rows():
    rows = []
    for name, code in E2E.items():
        timing = []
        for flag in ("1", "0"):
            env = dict(os.environ, ROTVEC_NUMBA=flag)
            subprocess.run([sys.executable, "-c", code], env=env, check=True)  # warm caches
            t0 = time.perf_counter()
            subprocess.run([sys.executable, "-c", code], env=env, check=True)
            timing.append(time.perf_counter() - t0)
        rows.append((name + " (process)", *timing))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    if not USE_NUMBA:
        print("ROTVEC_NUMBA=0: kernel rows still compile explicitly; gamma rows skipped")
    rows = kernel_rows(args.repeat)
    if not args.skip_e2e:
        rows += e2e_rows()
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numba [s]':>10}  {'numpy [s]':>10}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast:10.4f}  {slow:10.4f}  {slow / fast:8.1f}")


if __name__ == "__main__":
    main()

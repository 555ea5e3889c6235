"""Time the compiled and numpy integration kernels on the shipped scenarios.

    python benchmarks/bench_kernels.py [--repeat N] [--span T] [--end-to-end]

Kernel rows integrate one system over [0, T] with each backend and report the
median wall time. ``--end-to-end`` additionally times a batch of H/G
evaluations in a subprocess per backend (CONJLAB_PURE_PYTHON toggles the
fallback).
"""
from __future__ import annotations

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from conjlab import kernels
from conjlab.kernels import KIND_ADJ, KIND_LIN, KIND_NL, KIND_VAR, KIND_WAUG
from conjlab.ode_core import IntegratorConfig, integrate_model
from conjlab.scenario import load_file

KINDS = {"LIN": KIND_LIN, "ADJ": KIND_ADJ, "NL": KIND_NL, "VAR": KIND_VAR, "WAUG": KIND_WAUG}
SCENARIOS = ("jiang", "s3_rot", "periodic", "scaled_sin")

E2E_SNIPPET = """
import time, numpy as np
from conjlab.scenario import load_file
from conjlab.conjugacy import G, H
from conjlab.kernels import BACKEND
p = load_file({name!r}).problem
xs = np.linspace(-2, 2, 16)
t0 = time.perf_counter()
for t in (1.0, 5.0, 10.0):
    for x in xs:
        H(p, t, G(p, t, np.full(p.dim, x)))
print(BACKEND, time.perf_counter() - t0)
"""


def _y0(kind: int, n: int) -> np.ndarray:
    eta = np.linspace(0.7, -0.3, n)
    if kind in (KIND_LIN, KIND_ADJ):
        return np.eye(n).ravel()
    if kind == KIND_VAR:
        return np.concatenate((eta, np.eye(n).ravel()))
    if kind == KIND_WAUG:
        return np.concatenate((eta, np.zeros(n)))
    return eta


def _time(fn, repeat: int) -> float:
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def kernel_table(repeat: int, span: float) -> list[tuple]:
    cfg = IntegratorConfig()
    rows = []
    for name in SCENARIOS:
        p = load_file(name).problem
        for label, kind in KINDS.items():
            y0 = _y0(kind, p.dim)
            t_end = -span if kind == KIND_ADJ else span
            times = {}
            steps = 0
            for backend in kernels.available_backends():
                def run(b=backend):
                    return integrate_model(kind, p.model, 0.0, y0, t_end, cfg, backend=b)
                steps = run().sgrid.size
                times[backend] = _time(run, repeat)
            rows.append((name, label, steps, times.get("python"), times.get("cython")))
    return rows


def end_to_end(name: str) -> dict[str, float]:
    out = {}
    for pure in ("1", "0"):
        env = dict(os.environ, CONJLAB_PURE_PYTHON=pure)
        proc = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(name=name)], env=env,
                              capture_output=True, text=True, check=True)
        backend, secs = proc.stdout.split()
        out[backend] = float(secs)
    return out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--span", type=float, default=20.0)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)

    print(f"backends available: {', '.join(kernels.available_backends())}")
    print(f"{'scenario':<11} {'kind':<5} {'steps':>6} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, label, steps, py, cy in kernel_table(args.repeat, args.span):
        cy_txt = f"{1e3 * cy:10.2f}" if cy is not None else f"{'-':>10}"
        sp = f"{py / cy:7.1f}x" if cy else f"{'-':>8}"
        print(f"{name:<11} {label:<5} {steps:6d} {1e3 * py:10.2f} {cy_txt} {sp}")

    if args.end_to_end:
        print("\nH(G(x)) round trips, 48 per scenario")
        for name in ("jiang", "s3_rot"):
            r = end_to_end(name)
            py, cy = r.get("python"), r.get("cython")
            ratio = f"{py / cy:.1f}x" if py and cy else "-"
            print(f"{name:<11} python {py:.3f} s   cython {cy if cy is None else round(cy, 3)} s   {ratio}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

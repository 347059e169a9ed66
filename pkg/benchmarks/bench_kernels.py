#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--batch 2000] [--repeat 5]

The same arrays go through both implementations; the table reports the best
wall time per call and the speedup.  Run with BCFB_NO_NUMBA unset so both
paths are importable.
"""

import argparse
import time

import numpy as np

from bcfb import _kernels
from bcfb.backend import USE_NUMBA
from bcfb.channels import make_bsbc
from bcfb.regions import sample_aux


def best_time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mi_terms(batch, repeat):
    ch = make_bsbc(0.2, 0.1)
    structures = sample_aux(ch, batch, seed=0)
    qp = np.stack([a.q_pmf for a in structures])
    uq = np.stack([a.u_given_q for a in structures])
    xuq = np.stack([a.x_given_uq for a in structures])
    ytk = np.stack([a.yt_given_uy1q for a in structures])
    args = (qp, uq, xuq, ch.law, ytk)
    rows = []
    t_np = best_time(_kernels.aux_mi_terms_np, args, repeat)
    rows.append(("mi_terms", "numpy", t_np, batch / t_np))
    if USE_NUMBA:
        _kernels.aux_mi_terms_nb(*args)  # compile outside the timing
        t_nb = best_time(_kernels.aux_mi_terms_nb, args, repeat)
        rows.append(("mi_terms", "numba", t_nb, batch / t_nb))
        assert np.allclose(
            _kernels.aux_mi_terms_nb(*args), _kernels.aux_mi_terms_np(*args), atol=1e-12
        )
    return rows


def bench_typicality(batch, repeat):
    rng = np.random.default_rng(1)
    m, n, nc, nctx = batch * 4, 64, 3, 6
    cb = rng.integers(0, nc, size=(m, n)).astype(np.int8)
    ctx = rng.integers(0, nctx, size=n).astype(np.int64)
    p = rng.dirichlet(np.ones(nc * nctx)).reshape(nc, nctx)
    args = (cb, ctx, p, 0.5)
    rows = []
    t_np = best_time(_kernels.typical_matches_np, args, repeat)
    rows.append(("typicality", "numpy", t_np, m / t_np))
    if USE_NUMBA:
        _kernels.typical_matches_nb(*args)
        t_nb = best_time(_kernels.typical_matches_nb, args, repeat)
        rows.append(("typicality", "numba", t_nb, m / t_nb))
        assert _kernels.typical_matches_nb(*args) == _kernels.typical_matches_np(*args)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        print("note: numba path unavailable (BCFB_NO_NUMBA set or numba missing)")
    rows = bench_mi_terms(args.batch, args.repeat) + bench_typicality(args.batch, args.repeat)
    print(f"{'kernel':<12} {'backend':<8} {'best (ms)':>10} {'items/s':>12}")
    speed = {}
    for kernel, backend, t, rate in rows:
        print(f"{kernel:<12} {backend:<8} {t * 1e3:>10.2f} {rate:>12.0f}")
        speed.setdefault(kernel, {})[backend] = t
    for kernel, vals in speed.items():
        if {"numpy", "numba"} <= vals.keys():
            print(f"{kernel}: numba speedup x{vals['numpy'] / vals['numba']:.1f}")


if __name__ == "__main__":
    main()

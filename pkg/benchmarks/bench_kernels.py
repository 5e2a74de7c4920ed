"""Compare the compiled and pure-numpy projection kernels.

Run:  python3 benchmarks/bench_kernels.py [--batch 10000] [--dim 6]

Times the three hot kernels (cone projection, q-ball projection, p-norm
prox) on identical inputs through both backends and reports the agreement
between the results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from conegauge import _kernels_py

try:
    from conegauge import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(batch: int, dim: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    v0 = rng.normal(size=batch) * 2
    vb = rng.normal(size=(batch, dim)) * 2
    x = rng.normal(size=(batch, dim)) * 2
    rad = np.full(batch, 0.75)

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))

    print(f"batch={batch} dim={dim}")
    header = f"{'kernel':28s}" + "".join(f"{name:>12s}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}{'max diff':>12s}"
    print(header)

    one_w = np.full(1, 0.4)

    def sequential_prox(mod):
        # the proximal-gradient inner loop: many small sequential calls
        out = 0.0
        for i in range(2000):
            y, _ = mod.prox_pnorm_batch(x[i % batch][None, :], 3.0, one_w, 1e-12, 140)
            out += float(y.sum())
        return np.array([out])

    cases = [
        ("cone_project p=1.5", lambda m: m.cone_project_batch(v0, vb, 1.5, 1e-12, 140)),
        ("cone_project p=3", lambda m: m.cone_project_batch(v0, vb, 3.0, 1e-12, 140)),
        ("cone_project p=7", lambda m: m.cone_project_batch(v0, vb, 7.0, 1e-12, 140)),
        ("qball_project q=1.5", lambda m: m.qball_project_batch(x, 1.5, rad, 1e-12, 140)),
        ("prox_pnorm p=3", lambda m: m.prox_pnorm_batch(x, 3.0, rad, 1e-12, 140)),
        ("prox 2000 sequential", sequential_prox),
    ]
    for label, call in cases:
        times, outs = [], []
        for _, mod in backends:
            t, out = timeit(lambda m=mod: call(m))
            times.append(t)
            outs.append(out)
        line = f"{label:28s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(backends) == 2:
            diff = max(float(np.abs(np.asarray(a) - np.asarray(b)).max())
                       for a, b in zip(outs[0][:2], outs[1][:2]))
            line += f"{times[1] / times[0]:9.1f}x{diff:12.2e}"
        print(line)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=10000)
    ap.add_argument("--dim", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    bench(args.batch, args.dim, args.seed)

"""Compare the compiled and numpy cost kernels.

Run with ``python benchmarks/bench_kernels.py``. Times batched cost
evaluation over every Step-3 sign pattern and a full four-step match on
synthetic moments, once per backend.
"""

import argparse
import time

import numpy as np

from eigenmatch import kernels, matching
from eigenmatch.pipeline import decompose
from eigenmatch.synthetic import asymmetric_blob, bend, tapered_bar


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_batch(mx, my, backend, repeat):
    _, masks = matching._flip_matrix(mx.N)
    perms = np.tile(np.arange(mx.N, dtype=np.int64), (masks.shape[0] * 20, 1))
    signs = np.tile(masks, (20, 1))
    rows = {}
    for name, a, b in (("mu", mx.mu, my.mu), ("muS", mx.muS, my.muS),
                       ("xi", mx.xi, my.xi), ("xiS", mx.xiS, my.xiS)):
        fn = getattr(kernels, f"cost_{name}_batch")
        rows[name] = best_of(lambda: fn(a, b, perms, signs, backend=backend), repeat)
    return perms.shape[0], rows


def bench_match(mx, my, backend, repeat):
    saved = kernels._impl
    kernels._impl = kernels.get_backend(backend)
    try:
        return best_of(lambda: matching.match(mx, my), repeat)
    finally:
        kernels._impl = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; timing the numpy backend only")

    blob = decompose(asymmetric_blob(3)).moments
    bar = tapered_bar(3)
    pairs = {"self (blob)": (blob, blob),
             "bent bar": (decompose(bar).moments, decompose(bend(bar, 2.0)).moments)}

    M, _ = bench_batch(blob, blob, backends[0], 1)
    print(f"batched costs, N={blob.N}, {M} parameter sets (ms):")
    print(f"{'backend':8s} {'mu':>8s} {'muS':>8s} {'xi':>8s} {'xiS':>8s}")
    for b in backends:
        _, rows = bench_batch(blob, blob, b, args.repeat)
        print(f"{b:8s} " + " ".join(f"{1e3 * rows[k]:8.2f}" for k in ("mu", "muS", "xi", "xiS")))

    print("\nfull match (s):")
    for label, (mx, my) in pairs.items():
        line = " ".join(f"{b}={bench_match(mx, my, b, max(1, args.repeat // 2)):.3f}" for b in backends)
        print(f"  {label:12s} {line}")


if __name__ == "__main__":
    main()

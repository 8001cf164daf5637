"""Time the numpy and numba backends on identical kernel inputs.

Run from the repository root:

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --n 20000 --d 50 --steps 40000

The numba columns include a warmup call so JIT compilation is not billed
to the measurement. Outputs are cross-checked between backends before
any timing is reported.
"""

import argparse
import time

import numpy as np

from roblearn._kernels import HAS_NUMBA, active_backend, hinge_train, md_glm, md_rcn, set_backend


def make_inputs(n: int, d: int, steps: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    X /= np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1.0)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    sw = np.full(n, 1.0 / n)
    idx = rng.integers(0, n, size=steps)
    return X, y, sw, idx


def flatten(out) -> np.ndarray:
    parts = out if isinstance(out, tuple) else (out,)
    return np.concatenate([np.ravel(np.asarray(p, dtype=float)) for p in parts])


def bench(fn, repeats: int):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000, help="sample count")
    ap.add_argument("--d", type=int, default=30, help="dimension")
    ap.add_argument("--steps", type=int, default=20_000, help="optimizer steps")
    ap.add_argument("--repeats", type=int, default=3, help="timed repeats, best is kept")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    X, y, sw, idx = make_inputs(args.n, args.d, args.steps, args.seed)
    y01 = (y > 0).astype(np.float64)

    cases = {
        "hinge_train": lambda: hinge_train(X, y, sw, args.steps, 0.5, 1e-4, True),
        "md_rcn": lambda: md_rcn(X, y, 0.5, 0.25, 2.0, idx),
        "md_glm": lambda: md_glm(X, y01, 0.5, 0.2, 2.0, 0.5, idx),
    }

    print(f"n={args.n} d={args.d} steps={args.steps} repeats={args.repeats}")
    print(f"{'kernel':<14} {'numpy (s)':>10} {'numba (s)':>10} {'speedup':>8}")
    previous = active_backend()
    try:
        for name, fn in cases.items():
            set_backend("numpy")
            t_np, out_np = bench(fn, args.repeats)
            set_backend("numba")
            fn()  # warmup, pays the JIT cost once
            t_nb, out_nb = bench(fn, args.repeats)
            ref = flatten(out_np)
            got = flatten(out_nb)
            if not np.allclose(ref, got, rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree, refusing to report timings")
            print(f"{name:<14} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")
    finally:
        set_backend(previous)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

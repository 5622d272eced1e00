"""Timing comparison of the two SGD epoch kernels.

The package ships a compiled (Cython) inner loop and a pure NumPy
fallback that produce bitwise-identical models per backend choice.  This
script fits the same synthetic problems with each available backend and
prints wall times side by side, plus a quick agreement check so a broken
build is noticed here rather than in a long sweep.

Run from the repository root:

    python3 benchmarks/bench_sgd.py
    python3 benchmarks/bench_sgd.py --shapes 500x20,5000x100 --repeats 5
"""

import argparse
import time

import numpy as np

from fluidlab.linear import SgdConfig, available_backends, fit_linear


def make_problem(n, d, seed):
    rng = np.random.default_rng(seed)
    half = n // 2
    shift = np.full(d, 0.8 / np.sqrt(d))
    X = np.vstack(
        [rng.normal(-shift, 1.0, size=(half, d)), rng.normal(shift, 1.0, size=(n - half, d))]
    )
    y = np.concatenate([np.zeros(half, dtype=int), np.ones(n - half, dtype=int)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


def time_fit(X, y, cfg, backend, repeats):
    best = float("inf")
    model = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        model = fit_linear(X, y, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, model


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--shapes",
        default="200x20,1000x50,5000x100,2000x500",
        help="comma list of NxD problem sizes",
    )
    parser.add_argument("--repeats", type=int, default=3, help="take the best of this many runs")
    parser.add_argument("--max-epochs", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(sorted(backends))}")
    if len(backends) == 1:
        print("compiled kernel not built; timing the fallback only")
    elif len(backends) == 2:
        # Agreement holds over a short run; past that, the one-ulp
        # dot-product difference compounds through the step schedule and
        # the trajectories legitimately drift apart.
        X, y = make_problem(400, 30, args.seed)
        short = SgdConfig(alpha=1e-3, tol=0.0, max_epochs=5, seed=args.seed)
        a = fit_linear(X, y, short, backend="cython")
        b = fit_linear(X, y, short, backend="python")
        if a.n_epochs != b.n_epochs or not np.allclose(
            a.weights, b.weights, rtol=1e-6, atol=1e-9
        ):
            raise SystemExit("backends disagree on a short run; the build is broken")
        print("short-run agreement check passed")

    cfg = SgdConfig(alpha=1e-4, tol=0.0, max_epochs=args.max_epochs, seed=args.seed)
    names = sorted(backends)
    header = f"{'shape':>12}  {'epochs':>6}" + "".join(f"  {n + ' (s)':>12}" for n in names)
    if len(names) == 2:
        header += f"  {'speedup':>8}"
    print(header)

    for shape in args.shapes.split(","):
        n, d = (int(v) for v in shape.lower().split("x"))
        X, y = make_problem(n, d, args.seed)
        times = {}
        models = {}
        for name in names:
            times[name], models[name] = time_fit(X, y, cfg, name, args.repeats)
        row = f"{shape:>12}  {models[names[0]].n_epochs:>6}"
        row += "".join(f"  {times[n]:>12.4f}" for n in names)
        if len(names) == 2:
            row += f"  {times['python'] / times['cython']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()

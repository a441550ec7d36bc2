"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from fusion_ids import kernels


def _cases(rng):
    n, d = 20000, 122
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    order = rng.permutation(n)

    def pegasos(backend):
        w = np.zeros(d)
        kernels.pegasos_epoch(X, y, order, w, 0.0, 1, 1e-4, True, backend=backend)

    k, width, m = 5, 71, 100000
    logp = np.log(rng.uniform(0.01, 1.0, size=(k, 2, width)))
    codes = rng.integers(0, width, size=(m, k))
    weights = rng.uniform(0.5, 1.0, size=k)
    logprior = np.log([0.5, 0.5])

    def nb(backend):
        kernels.nb_log_joint(codes, logp, weights, logprior, backend=backend)

    truth = rng.integers(0, 2, size=1_000_000).astype(np.int8)
    pred = rng.integers(0, 2, size=1_000_000).astype(np.int8)

    def confusion(backend):
        kernels.confusion_counts(truth, pred, backend=backend)

    return {"pegasos_epoch (20000 x 122)": pegasos, "nb_log_joint (100000 x 5)": nb,
            "confusion_counts (1e6)": confusion}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        kernels.get_backend("cython")
        backends = ("python", "cython")
    except ImportError:
        print("compiled kernels not built; timing the fallback only")
        backends = ("python",)
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases.items():
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends]
        line = f"{name:<30}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()

"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--qubits 10 14 18] [--repeat 5]

Times single-qubit rotations (plain and controlled), marginal probabilities
and an end-to-end triplet readout. The pure-Python backend is always
available; the compiled one only if the extension was built.
"""
import argparse
import timeit

import numpy as np

from qaml import _pykernels

try:
    from qaml import _kernels as _cykernels
except ImportError:
    _cykernels = None


def cases(n):
    rng = np.random.default_rng(0)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    qubits = np.array([0, n // 2, n - 1], dtype=np.int64)
    ctrl = 1 << (n - 1)
    return {
        "ry": lambda k: k.apply_ry(amps, n // 2, 0.3, 0, 0),
        "cry": lambda k: k.apply_ry(amps, 0, 0.3, ctrl, ctrl),
        "h": lambda k: k.apply_1q(amps, 1, *([2 ** -0.5] * 3), -(2 ** -0.5)),
        "marginal": lambda k: k.marginal_probs(amps, qubits),
    }


def best_of(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def readout_time(repeat):
    from qaml import _backend, model as model_mod, sim
    from qaml.model import AnsatzConfig, MetricModel, triplet_readout

    m = MetricModel.initial(AnsatzConfig(3, 4), np.random.default_rng(0))
    a, p, n = np.random.default_rng(1).uniform(0, np.pi, (3, 4))
    out = {}
    for name, kern in (("python", _pykernels), ("cython", _cykernels)):
        if kern is None:
            continue
        saved = sim.kernels
        sim.kernels = kern
        try:
            out[name] = best_of(lambda: triplet_readout(a, p, n, m), repeat)
        finally:
            sim.kernels = saved
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--qubits", type=int, nargs="+", default=[10, 14, 18])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _cykernels is None:
        print("compiled extension not built; reporting the numpy backend only")
    print(f"{'kernel':<10}{'qubits':>7}{'numpy (us)':>14}{'cython (us)':>14}{'speedup':>9}")
    for n in args.qubits:
        for name, fn in cases(n).items():
            py = best_of(lambda: fn(_pykernels), args.repeat) * 1e6
            if _cykernels is None:
                print(f"{name:<10}{n:>7}{py:>14.1f}{'-':>14}{'-':>9}")
                continue
            cy = best_of(lambda: fn(_cykernels), args.repeat) * 1e6
            print(f"{name:<10}{n:>7}{py:>14.1f}{cy:>14.1f}{py / cy:>8.1f}x")
    t = readout_time(args.repeat)
    line = "  ".join(f"{k} {v * 1e3:.3f} ms" for k, v in t.items())
    print(f"triplet readout (d=4, L=3): {line}")


if __name__ == "__main__":
    main()

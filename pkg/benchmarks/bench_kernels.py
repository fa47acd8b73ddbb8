"""Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``. Each kernel is
timed on typical sizes, then whole estimator calls are timed with the
kernel table switched between the two backends.
"""

import argparse
import timeit

import numpy as np

from regcov import kernels
from regcov.estimators import EstimatorConfig, estimate
from regcov.kernels import _pykernels

try:
    from regcov.kernels import _ckernels
except ImportError:
    _ckernels = None

NAMES = ("weighted_scatter", "normalized_scatter", "quad_forms", "shift_mc_eigs", "anscm_closed_eigs")


def _cases(rng):
    d = 8
    Xc = (rng.standard_normal((2000, d)) + 1j * rng.standard_normal((2000, d))) / np.sqrt(2)
    Xr = rng.standard_normal((2000, d))
    A = np.linalg.inv(np.eye(d) + 0.1 * np.ones((d, d)))
    g = rng.standard_normal((100_000, d)) ** 2
    lam = np.sort(rng.uniform(0.5, 2.0, d))
    Xs = Xc[:11].copy()
    return [
        ("weighted_scatter", "complex n=11 d=8", (Xs, np.ones(11))),
        ("normalized_scatter", "complex n=11 d=8", (Xs,)),
        ("quad_forms", "complex n=11 d=8", (Xs, A.astype(complex))),
        ("weighted_scatter", "complex n=2000 d=8", (Xc, np.ones(2000))),
        ("weighted_scatter", "real n=2000 d=8", (Xr, np.ones(2000))),
        ("normalized_scatter", "complex n=2000 d=8", (Xc,)),
        ("quad_forms", "complex n=2000 d=8", (Xc, A.astype(complex))),
        ("shift_mc_eigs", "n=100000 d=8", (g, lam)),
        ("anscm_closed_eigs", "d=8", (lam,)),
    ]


def _time(fn, repeat):
    number = max(1, int(0.2 / max(min(timeit.repeat(fn, number=1, repeat=3)), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def _use(impl):
    for name in NAMES:
        setattr(kernels, name, getattr(impl, name))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; only the numpy fallback is available")
        return 1
    rng = np.random.default_rng(0)

    print(f"{'kernel':<20}{'case':<22}{'cython':>12}{'python':>12}{'speedup':>10}")
    for name, label, fn_args in _cases(rng):
        tc = _time(lambda: getattr(_ckernels, name)(*fn_args), args.repeat)
        tp = _time(lambda: getattr(_pykernels, name)(*fn_args), args.repeat)
        print(f"{name:<20}{label:<22}{tc * 1e6:>10.1f}us{tp * 1e6:>10.1f}us{tp / tc:>9.1f}x")

    d, N = 8, 11
    prior_c = np.eye(d, dtype=complex)
    Xc = (rng.standard_normal((N, d)) + 1j * rng.standard_normal((N, d))) / np.sqrt(2)
    Xr = rng.standard_normal((N, d))
    cfg = EstimatorConfig(alpha=0.25, p=0.75)
    calls = [
        ("tyler complex d=8 N=11", lambda: estimate("tyler", prior_c, Xc, cfg)),
        ("tyler real d=8 N=11", lambda: estimate("tyler", np.eye(d), Xr, cfg)),
        ("pcg complex d=8 N=11", lambda: estimate("pcg", prior_c, Xc, cfg)),
    ]
    print()
    print(f"{'estimator call':<42}{'cython':>12}{'python':>12}{'speedup':>10}")
    for label, fn in calls:
        _use(_ckernels)
        tc = _time(fn, args.repeat)
        _use(_pykernels)
        tp = _time(fn, args.repeat)
        print(f"{label:<42}{tc * 1e3:>10.2f}ms{tp * 1e3:>10.2f}ms{tp / tc:>9.1f}x")
    _use(_ckernels if kernels.BACKEND == "cython" else _pykernels)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

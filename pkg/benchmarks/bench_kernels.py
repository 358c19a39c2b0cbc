"""Time the numba and pure-numpy paths of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is run once untimed per path so JIT compilation is excluded,
then the best of ``--repeat`` timings is reported. Outputs of the two paths
are checked against each other before timing.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import timeit

import numpy as np

from hypertime import _accel


def cases(rng):
    # FFT: one HyperTime batch of length-128 series and a long single row
    yield "fft_radix2 (32 x 128)", _accel.fft_radix2_numpy, _accel.fft_radix2_numba, (
        rng.normal(size=(32, 128)) + 0j,
    )
    yield "fft_radix2 (4 x 4096)", _accel.fft_radix2_numpy, _accel.fft_radix2_numba, (
        rng.normal(size=(4, 4096)) + 0j,
    )
    a = rng.normal(size=(300, 512))
    lo, hi = np.quantile(a, [0.01, 0.99], axis=0)
    yield "band_coverage (300 x 512)", _accel.band_coverage_numpy, _accel.band_coverage_numba, (a, lo, hi, 1e-9)
    t = np.linspace(-1, 1, 1024)
    obs = np.sort(rng.choice(1024, size=512, replace=False))
    yield "knn_fill (512 obs, 1024 queries)", _accel.knn_fill_numpy, _accel.knn_fill_numba, (
        t[obs], rng.normal(size=(1, 512)), t, 5,
    )


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="also write results to this file")
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run", file=sys.stderr)
        return 1

    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':36s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, f_np, f_nb, call_args in cases(rng):
        ref, got = f_np(*call_args), f_nb(*call_args)  # also warms the JIT
        if not np.allclose(ref, got, rtol=1e-10, atol=1e-10):
            print(f"{name}: paths disagree", file=sys.stderr)
            return 1
        number = max(1, int(0.2 / max(timeit.timeit(lambda: f_np(*call_args), number=1), 1e-6)))
        t_np = min(timeit.repeat(lambda: f_np(*call_args), number=number, repeat=args.repeat)) / number
        t_nb = min(timeit.repeat(lambda: f_nb(*call_args), number=number, repeat=args.repeat)) / number
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb})
        print(f"{name:36s} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:7.1f}x")

    if args.json:
        meta = {"python": platform.python_version(), "numpy": np.__version__,
                "numba": _accel.numba.__version__, "machine": platform.machine()}
        with open(args.json, "w") as fh:
            json.dump({"meta": meta, "results": rows}, fh, indent=2)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

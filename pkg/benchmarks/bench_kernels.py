"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--size 512] [--repeats 3]

Prints the median wall time per kernel and for the full removal pipeline,
and checks that both backends produce identical outputs.
"""

from __future__ import annotations

import argparse
import statistics
import time
from unittest import mock

import numpy as np

from umbra import kernels, relight, superpix
from umbra.features import lbp_codes
from umbra.imagecore import rgb_to_gray, rgb_to_lab
from umbra.synth import make_scene


def timed(fn, repeats):
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation`")
    scene = make_scene(np.random.default_rng(args.seed), size=args.size)
    img, mask = scene.image, scene.mask
    lab = rgb_to_lab(img)
    gray = rgb_to_gray(img)

    cases = {
        "lbp_codes": lambda b: lbp_codes(gray, backend=b),
        "manhattan_distance": lambda b: b.manhattan_distance(mask.astype(np.uint8)),
        "slic_masked": lambda b: superpix.slic_masked(img, mask, lab=lab, backend=b).labels,
    }
    print(f"image {args.size}x{args.size}, median of {args.repeats}")
    print(f"{'kernel':<20}{'cython_s':>10}{'python_s':>10}{'speedup':>9}  equal")
    for name, fn in cases.items():
        tc, oc = timed(lambda: fn(kernels.BACKENDS["cython"]), args.repeats)
        tp, op = timed(lambda: fn(kernels.BACKENDS["python"]), args.repeats)
        print(f"{name:<20}{tc:>10.4f}{tp:>10.4f}{tp / tc:>9.2f}  {same(oc, op)}")

    results = {}
    for name in ("cython", "python"):
        with mock.patch.multiple(kernels, **{k: getattr(kernels.BACKENDS[name], k) for k in kernels.__all__}):
            results[name] = timed(lambda: relight.remove_shadows(img, mask)[0], args.repeats)
    (tc, oc), (tp, op) = results["cython"], results["python"]
    print(f"{'remove_shadows':<20}{tc:>10.4f}{tp:>10.4f}{tp / tc:>9.2f}  {same(oc, op)}")


if __name__ == "__main__":
    main()

"""Timing comparison of the compiled kernels against the numpy fallback.

Run from the repository root after an editable install:

    python3 benchmarks/bench_backends.py
"""

import argparse
import math
import sys
import timeit

import numpy as np

IMAGE_SIDE = 512
PATCH_SIDE = 31
DESC_COUNT = 400
DESC_DIM = 128
STACK_SHAPE = (9, 256, 256)


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    img = np.ascontiguousarray(rng.uniform(0, 255, (IMAGE_SIDE, IMAGE_SIDE)))
    field = np.ascontiguousarray(rng.standard_normal((PATCH_SIDE, PATCH_SIDE, 2)))
    sigma = 3.2
    r = max(1, math.ceil(3 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    kernel = np.exp(-x * x / (2 * sigma * sigma))
    kernel /= kernel.sum()
    stack = np.ascontiguousarray(rng.standard_normal(STACK_SHAPE))
    queries = np.ascontiguousarray(rng.uniform(0, 1, (DESC_COUNT, DESC_DIM)))
    refs = np.ascontiguousarray(rng.uniform(0, 1, (DESC_COUNT, DESC_DIM)))
    return img, field, kernel, stack, queries, refs


def _cases(mod, img, field, kernel, stack, queries, refs):
    return [
        ("gradient 512^2", lambda: mod.gradient(img), 20),
        ("laplacian 512^2", lambda: mod.laplacian(img), 20),
        ("laplace_of_field 31^2", lambda: mod.laplace_of_field(field), 2000),
        ("separable_blur 512^2", lambda: mod.separable_blur(img, kernel), 10),
        (
            "bilinear_patch 31^2",
            lambda: mod.bilinear_patch(img, 201.3, 174.8, 0.8, 0.6, 0.45, PATCH_SIDE),
            2000,
        ),
        (
            "accumulate_grid 31^2",
            lambda: mod.accumulate_grid(field, PATCH_SIDE / 2.0),
            2000,
        ),
        (
            "orientation_histogram 31^2",
            lambda: mod.orientation_histogram(field, 8),
            2000,
        ),
        ("extrema_mask 9x256^2", lambda: mod.extrema_mask(stack, 1.5), 10),
        (
            f"top2_neighbors {DESC_COUNT}x{DESC_COUNT}",
            lambda: mod.top2_neighbors(queries, refs),
            5,
        ),
    ]


def _time(fn, number, repeat):
    best = min(timeit.repeat(fn, number=number, repeat=repeat))
    return best / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions")
    args = parser.parse_args(argv)

    from dci import _kernels_py

    try:
        from dci import _kernels
    except ImportError:
        print("compiled extension is not built; nothing to compare", file=sys.stderr)
        return 1

    data = _inputs()
    fast_cases = _cases(_kernels, *data)
    slow_cases = _cases(_kernels_py, *data)

    name_w = max(len(name) for name, _, _ in fast_cases)
    print(f"{'kernel':<{name_w}}  {'compiled':>12}  {'numpy':>12}  {'speedup':>8}")
    for (name, fast, number), (_, slow, _) in zip(fast_cases, slow_cases):
        t_fast = _time(fast, number, args.repeat)
        t_slow = _time(slow, number, args.repeat)
        print(
            f"{name:<{name_w}}  {t_fast * 1e6:>10.1f}us  {t_slow * 1e6:>10.1f}us"
            f"  {t_slow / t_fast:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())

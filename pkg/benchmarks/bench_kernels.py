"""Compare the numba and numpy paths of the integer kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call both implementations in one process (numba compiled
first, compile time excluded).  The end-to-end row multiplies two dense
polynomials in a subprocess per path, selected with LNDKIT_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lndkit import _kernels as K

PRIME = 2147483629

E2E = """
import time
from lndkit.parser import parse_poly
from lndkit.poly import VarSet
vs = VarSet(["x", "y", "z"])
f = parse_poly("(1 + x + 2*y - 3*z + x*y*z)^6", vs)
g = parse_poly("(2 - x + y^2 + z - x*z)^6", vs)
f * g
t = time.perf_counter()
for _ in range(3):
    f * g
print((time.perf_counter() - t) / 3)
"""


def cases(rng):
    ka = np.sort(rng.integers(0, 10 ** 6, 400)).astype(np.int64)
    kb = np.sort(rng.integers(0, 10 ** 6, 400)).astype(np.int64)
    exps = rng.integers(0, 12, size=(20000, 6)).astype(np.int64)
    w = rng.integers(1, 5, size=6).astype(np.int64)
    mat = rng.integers(0, PRIME, size=(60, 60)).astype(np.int64)
    return {
        "group_product_keys 400x400": ("group_product_keys", (ka, kb)),
        "weighted_max 20000x6": ("weighted_max", (exps, w)),
        "rank_mod_p 60x60": ("rank_mod_p", (mat, PRIME)),
    }


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def end_to_end(flag):
    env = dict(os.environ, LNDKIT_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.USE_NUMBA:
        sys.exit("numba is disabled or missing; unset LNDKIT_DISABLE_NUMBA to compare both paths")
    rng = np.random.default_rng(0)
    print(f"{'case':32} {'numba ms':>10} {'numpy ms':>10} {'ratio':>7}")
    for label, (name, inputs) in cases(rng).items():
        fast, slow = K.compiled_impl[name], K.numpy_impl[name]
        fast(*inputs)  # compile
        a = best_of(fast, inputs, args.repeat)
        b = best_of(slow, inputs, args.repeat)
        print(f"{label:32} {a * 1e3:10.3f} {b * 1e3:10.3f} {b / a:7.2f}")
    a, b = end_to_end("0"), end_to_end("1")
    print(f"{'poly product (end to end)':32} {a * 1e3:10.3f} {b * 1e3:10.3f} {b / a:7.2f}")


if __name__ == "__main__":
    main()

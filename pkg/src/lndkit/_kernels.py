"""Integer kernels over exponent matrices and modular matrices.

Coefficients in lndkit are arbitrary-precision rationals and stay in Python
(gmpy2).  What can be compiled is the integer bookkeeping around them:
grouping the monomials of a large product, weighted degrees of exponent
matrices, and ranks over a prime field.

Every kernel has a numba ``@njit`` version and a pure-numpy version with the
same signature.  Set ``LNDKIT_DISABLE_NUMBA=1`` to force the numpy path (numba
is also skipped when it is not importable).
"""

import os

import numpy as np

DISABLED = os.environ.get("LNDKIT_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    if DISABLED:
        raise ImportError("disabled by LNDKIT_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    njit = None

USE_NUMBA = njit is not None

# packed monomial keys must stay below this bound to be safe in int64
KEY_LIMIT = 1 << 62


# ---------------------------------------------------------------------------
# grouping of product keys


def _group_product_keys_numpy(ka, kb):
    keys = (ka[:, None] + kb[None, :]).ravel()
    order = np.argsort(keys, kind="stable")
    ordered = keys[order]
    if ordered.size == 0:
        return order, np.zeros(0, np.int64), ordered
    edge = np.empty(ordered.size, dtype=bool)
    edge[0] = True
    np.not_equal(ordered[1:], ordered[:-1], out=edge[1:])
    starts = np.flatnonzero(edge)
    return order, starts, ordered[starts]


def _group_product_keys_loop(ka, kb):
    m = ka.shape[0]
    p = kb.shape[0]
    keys = np.empty(m * p, dtype=np.int64)
    for i in range(m):
        for j in range(p):
            keys[i * p + j] = ka[i] + kb[j]
    order = np.argsort(keys, kind="mergesort")
    n = keys.shape[0]
    starts = np.empty(n, dtype=np.int64)
    uniq = np.empty(n, dtype=np.int64)
    count = 0
    prev = 0
    for t in range(n):
        k = keys[order[t]]
        if t == 0 or k != prev:
            starts[count] = t
            uniq[count] = k
            count += 1
            prev = k
    return order, starts[:count], uniq[:count]


# ---------------------------------------------------------------------------
# weighted degree


def _weighted_max_numpy(exps, weights):
    return int((exps @ weights).max())


def _weighted_max_loop(exps, weights):
    best = -1
    for i in range(exps.shape[0]):
        s = 0
        for j in range(exps.shape[1]):
            s += exps[i, j] * weights[j]
        if i == 0 or s > best:
            best = s
    return best


# ---------------------------------------------------------------------------
# rank over GF(p)


def _rank_mod_p_numpy(mat, p):
    m = mat.copy() % p
    rows, cols = m.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nz = np.flatnonzero(m[rank:, c])
        if nz.size == 0:
            continue
        r = rank + nz[0]
        if r != rank:
            m[[rank, r]] = m[[r, rank]]
        inv = pow(int(m[rank, c]), p - 2, p)
        m[rank] = (m[rank] * inv) % p
        below = m[rank + 1:, c].copy()
        if below.any():
            m[rank + 1:] = (m[rank + 1:] - np.outer(below, m[rank])) % p
        rank += 1
    return rank


def _rank_mod_p_loop(mat, p):
    m = mat.copy()
    rows, cols = m.shape
    for i in range(rows):
        for j in range(cols):
            m[i, j] = m[i, j] % p
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        r = -1
        for i in range(rank, rows):
            if m[i, c] != 0:
                r = i
                break
        if r < 0:
            continue
        if r != rank:
            for j in range(cols):
                tmp = m[rank, j]
                m[rank, j] = m[r, j]
                m[r, j] = tmp
        # modular inverse by square-and-multiply, p prime
        inv = 1
        base = m[rank, c]
        e = p - 2
        while e > 0:
            if e & 1:
                inv = (inv * base) % p
            base = (base * base) % p
            e >>= 1
        for j in range(cols):
            m[rank, j] = (m[rank, j] * inv) % p
        for i in range(rank + 1, rows):
            f = m[i, c]
            if f != 0:
                for j in range(cols):
                    m[i, j] = (m[i, j] - f * m[rank, j]) % p
        rank += 1
    return rank


numpy_impl = {
    "group_product_keys": _group_product_keys_numpy,
    "weighted_max": _weighted_max_numpy,
    "rank_mod_p": _rank_mod_p_numpy,
}
if USE_NUMBA:
    compiled_impl = {
        "group_product_keys": njit(cache=True)(_group_product_keys_loop),
        "weighted_max": njit(cache=True)(_weighted_max_loop),
        "rank_mod_p": njit(cache=True)(_rank_mod_p_loop),
    }
else:
    compiled_impl = dict(numpy_impl)

# The grouping kernel is dominated by a stable int64 sort, where numpy beats
# the compiled merge sort (see benchmarks/bench_kernels.py); it always takes
# the numpy path.
group_product_keys = _group_product_keys_numpy
weighted_max = compiled_impl["weighted_max"]
rank_mod_p = compiled_impl["rank_mod_p"]

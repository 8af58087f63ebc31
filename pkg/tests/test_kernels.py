import json
import os
import subprocess
import sys

import numpy as np
import pytest
from sympy import GF
from sympy.polys.matrices import DomainMatrix

from lndkit import _kernels as K

P = 2147483629  # a prime below 2^31, so products fit in int64


def rng(seed):
    return np.random.default_rng(seed)


@pytest.mark.parametrize("seed", range(20))
def test_group_product_keys_agree(seed):
    g = rng(seed)
    ka = np.sort(g.integers(0, 500, size=g.integers(0, 30))).astype(np.int64)
    kb = np.sort(g.integers(0, 500, size=g.integers(1, 30))).astype(np.int64)
    ref = K.numpy_impl["group_product_keys"](ka, kb)
    for got in (K.compiled_impl["group_product_keys"](ka, kb), K._group_product_keys_loop(ka, kb)):
        for a, b in zip(ref, got):
            assert np.array_equal(a, b)
    order, starts, uniq = ref
    keys = (ka[:, None] + kb[None, :]).ravel()
    assert np.array_equal(uniq, np.unique(keys))
    assert np.array_equal(keys[order][starts], uniq)


@pytest.mark.parametrize("seed", range(20))
def test_weighted_max_agrees(seed):
    g = rng(seed)
    n = int(g.integers(1, 6))
    exps = g.integers(0, 9, size=(int(g.integers(1, 40)), n)).astype(np.int64)
    w = g.integers(0, 5, size=n).astype(np.int64)
    want = int(max(int(row @ w) for row in exps))
    assert int(K.numpy_impl["weighted_max"](exps, w)) == want
    assert int(K.compiled_impl["weighted_max"](exps, w)) == want
    assert int(K._weighted_max_loop(exps, w)) == want


@pytest.mark.parametrize("seed", range(20))
def test_rank_mod_p_agrees_with_sympy(seed):
    g = rng(seed)
    rows, cols = int(g.integers(1, 7)), int(g.integers(1, 7))
    mat = g.integers(0, 5, size=(rows, cols)).astype(np.int64)
    if seed % 3 == 0 and rows > 1:
        mat[-1] = (2 * mat[0] + 3 * mat[1 % rows]) % P
    want = DomainMatrix([[GF(P)(int(v)) for v in row] for row in mat], (rows, cols), GF(P)).rank()
    for impl in (K.numpy_impl["rank_mod_p"], K.compiled_impl["rank_mod_p"], K._rank_mod_p_loop):
        assert int(impl(mat.copy(), P)) == want


def test_rank_mod_p_does_not_mutate_input():
    mat = np.array([[1, 2], [3, 4]], dtype=np.int64)
    before = mat.copy()
    K.rank_mod_p(mat, P)
    assert np.array_equal(mat, before)


def test_numba_active_unless_disabled():
    if os.environ.get("LNDKIT_DISABLE_NUMBA", "") in ("", "0"):
        assert K.USE_NUMBA
        assert K.rank_mod_p is not K._rank_mod_p_numpy


def test_env_flag_selects_numpy_path():
    code = (
        "import json; from lndkit import _kernels as K; "
        "print(json.dumps([K.USE_NUMBA, K.rank_mod_p is K._rank_mod_p_numpy]))"
    )
    env = dict(os.environ, LNDKIT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert json.loads(out.stdout) == [False, True]


def test_results_identical_across_paths():
    # the same corpus run under both kernel paths gives byte-identical output
    runs = []
    for flag in ("0", "1"):
        env = dict(os.environ, LNDKIT_DISABLE_NUMBA=flag)
        p = subprocess.run([sys.executable, "-m", "lndkit", "run-corpus"], env=env,
                           capture_output=True, text=True, check=False)
        assert p.returncode == 0, p.stdout + p.stderr
        runs.append(p.stdout)
    assert runs[0] == runs[1]

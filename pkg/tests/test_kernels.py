import os
import subprocess
import sys

import numpy as np
import pytest

from quadbell import kernels
from quadbell.operators import pair_expectations, recursion_tensors
from quadbell.tensor import random_unit_vectors

needs_compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def _batch(n, k, rng, mixed=False):
    d = 1 << n
    if mixed:
        G = rng.standard_normal((k, d, d)) + 1j * rng.standard_normal((k, d, d))
        rho = G @ np.conj(np.transpose(G, (0, 2, 1)))
        return rho / np.trace(rho, axis1=1, axis2=2)[:, None, None]
    psi = rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


@needs_compiled
@pytest.mark.parametrize("n", [2, 3, 5, 8])
@pytest.mark.parametrize("pair", ["F", "S"])
def test_backends_agree(n, pair, rng):
    if pair == "S" and n < 3:
        pytest.skip("S needs three particles")
    vecs = random_unit_vectors((6, n, 2), rng)
    for mixed in (False, True):
        states = _batch(n, 6, rng, mixed)
        kind = "mixed" if mixed else "pure"
        a = pair_expectations(pair, vecs, states, kind, backend="numpy")
        b = pair_expectations(pair, vecs, states, kind, backend="cython")
        np.testing.assert_allclose(a, b, atol=1e-12)


@needs_compiled
def test_family_apply_raw_shapes(rng):
    vecs = random_unit_vectors((3, 4, 2), rng)
    base, blocks = recursion_tensors("F", vecs)
    X = rng.standard_normal((3, 16, 5)) + 0j
    a = kernels.family_apply(base, blocks, X, "numpy")
    b = kernels.family_apply(base, blocks, X, "cython")
    assert a.shape == b.shape == (3, 2, 16, 5)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.family_apply(np.zeros((1, 2, 2, 2)), np.zeros((1, 0, 2, 2, 2, 2)), np.zeros((1, 2, 1)), "fortran")


def test_pure_python_switch():
    env = dict(os.environ, QUADBELL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import quadbell.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"

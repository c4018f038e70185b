"""Pure numpy implementation of the recursive family kernel.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled path is benchmarked and tested against.
"""

import numpy as np


def family_apply(base, blocks, X):
    """Apply a pair of recursively defined operators to a batch of inputs.

    Parameters
    ----------
    base : (K, 2, 2, 2) complex
        ``base[k, f]`` is the single-qubit operator of family member ``f``
        acting on the first particle.
    blocks : (K, L, 2, 2, 2, 2) complex
        ``blocks[k, l, out, in]`` is the 2x2 matrix that multiplies family
        member ``in`` of level ``l + 1`` when forming member ``out`` of
        level ``l + 2``.
    X : (K, D, R) complex
        Inputs, ``D = 2 ** (L + 1)``.

    Returns
    -------
    (K, 2, D, R) complex
        ``Y[k, f] = O_f X[k]`` where ``O_f`` is the top-level operator.
    """
    K, L = blocks.shape[:2]
    D, R = X.shape[1:]
    cur = np.einsum("kfab,kbr->kfar", base, X.reshape(K, 2, -1))
    for level in range(L):
        left = 2 ** (level + 1)
        right = (D // (2 * left)) * R
        cur = cur.reshape(K, 2, left, 2, right)
        cur = np.einsum("koiab,kilbr->kolar", blocks[:, level], cur)
    return cur.reshape(K, 2, D, R)

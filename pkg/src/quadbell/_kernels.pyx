# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled recursive family kernel. Same contract as ``_kernels_py``."""

import numpy as np


def family_apply(const double complex[:, :, :, ::1] base,
                 const double complex[:, :, :, :, :, ::1] blocks,
                 const double complex[:, :, ::1] X):
    cdef Py_ssize_t K = X.shape[0]
    cdef Py_ssize_t D = X.shape[1]
    cdef Py_ssize_t R = X.shape[2]
    cdef Py_ssize_t L = blocks.shape[1]
    cdef Py_ssize_t N = D * R
    cdef Py_ssize_t half = N // 2
    cdef Py_ssize_t k, f, o, a, b, i, j, level, left, right, src, dst
    cdef double complex acc

    out0 = np.empty((K, 2, N), dtype=np.complex128)
    out1 = np.empty((K, 2, N), dtype=np.complex128)
    cdef double complex[:, :, ::1] cur = out0
    cdef double complex[:, :, ::1] nxt = out1
    cdef double complex[:, :, ::1] tmp
    cdef const double complex[:, ::1] Xf = np.asarray(X).reshape(K, N)

    with nogil:
        for k in range(K):
            for f in range(2):
                for a in range(2):
                    for j in range(half):
                        cur[k, f, a * half + j] = (base[k, f, a, 0] * Xf[k, j]
                                                   + base[k, f, a, 1] * Xf[k, half + j])
        left = 2
        for level in range(L):
            right = N // (2 * left)
            for k in range(K):
                for o in range(2):
                    for i in range(left):
                        for a in range(2):
                            dst = (i * 2 + a) * right
                            for j in range(right):
                                acc = 0
                                for f in range(2):
                                    for b in range(2):
                                        src = (i * 2 + b) * right + j
                                        acc = acc + blocks[k, level, o, f, a, b] * cur[k, f, src]
                                nxt[k, o, dst + j] = acc
            tmp = cur
            cur = nxt
            nxt = tmp
            left = left * 2

    return np.asarray(cur).reshape(K, 2, D, R)

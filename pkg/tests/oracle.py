"""Reference implementations used to derive expected values.

Written independently of the package: plain Kronecker products, literal
recursions and exhaustive loops, favouring obviousness over speed.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def spin(v) -> np.ndarray:
    return v[0] * SX + v[1] * SY + v[2] * SZ


def kron(*ms) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in ms:
        out = np.kron(out, m)
    return out


def mk_pair(vectors):
    """(F_n, F'_n) straight from the recursion, base case CHSH on the first two particles."""
    A = [spin(v[0]) for v in vectors]
    Ap = [spin(v[1]) for v in vectors]
    F = kron(A[0], A[1]) + kron(A[0], Ap[1]) + kron(Ap[0], A[1]) - kron(Ap[0], Ap[1])
    Fp = kron(Ap[0], Ap[1]) + kron(Ap[0], A[1]) + kron(A[0], Ap[1]) - kron(A[0], A[1])
    for j in range(2, len(vectors)):
        F, Fp = (0.5 * kron(F, A[j] + Ap[j]) + 0.5 * kron(Fp, A[j] - Ap[j]),
                 0.5 * kron(Fp, Ap[j] + A[j]) + 0.5 * kron(F, Ap[j] - A[j]))
    return F, Fp


def svetlichny_pair(vectors):
    """(S+_n, S-_n): the eight signed three-particle terms, then S±_{m+1} = S±_m A ∓ S∓_m A'."""
    A = [spin(v[0]) for v in vectors]
    Ap = [spin(v[1]) for v in vectors]
    a, b, c = (A[0], Ap[0]), (A[1], Ap[1]), (A[2], Ap[2])
    # 0 = unprimed, 1 = primed; S- has + on the even-prime terms, - on the odd
    Sp = np.zeros((8, 8), dtype=complex)
    Sm = np.zeros((8, 8), dtype=complex)
    plus_signs = {0: 1, 1: -1, 2: -1, 3: 1}
    minus_signs = {0: 1, 1: 1, 2: -1, 3: -1}
    for i, j, k in itertools.product((0, 1), repeat=3):
        t = kron(a[i], b[j], c[k])
        w = i + j + k
        Sp += plus_signs[w] * t
        Sm += minus_signs[w] * t
    for m in range(3, len(vectors)):
        Sp, Sm = kron(Sp, A[m]) - kron(Sm, Ap[m]), kron(Sm, A[m]) + kron(Sp, Ap[m])
    return Sp, Sm


def symbolic_f(n: int) -> tuple[dict, dict]:
    """Exact term dictionaries {choice string: Fraction} for F_n and F'_n."""
    F = {"uu": Fraction(1), "up": Fraction(1), "pu": Fraction(1), "pp": Fraction(-1)}
    Fp = {"pp": Fraction(1), "pu": Fraction(1), "up": Fraction(1), "uu": Fraction(-1)}
    for _ in range(2, n):
        nF, nFp = {}, {}
        for ch, c in F.items():
            nF[ch + "u"] = nF.get(ch + "u", 0) + c / 2
            nF[ch + "p"] = nF.get(ch + "p", 0) + c / 2
            nFp[ch + "p"] = nFp.get(ch + "p", 0) + c / 2
            nFp[ch + "u"] = nFp.get(ch + "u", 0) - c / 2
        for ch, c in Fp.items():
            nF[ch + "u"] = nF.get(ch + "u", 0) + c / 2
            nF[ch + "p"] = nF.get(ch + "p", 0) - c / 2
            nFp[ch + "p"] = nFp.get(ch + "p", 0) + c / 2
            nFp[ch + "u"] = nFp.get(ch + "u", 0) + c / 2
        F = {k: v for k, v in nF.items() if v}
        Fp = {k: v for k, v in nFp.items() if v}
    return F, Fp


def expectation(op, psi_or_rho) -> float:
    x = np.asarray(psi_or_rho)
    if x.ndim == 1:
        return float(np.real(x.conj() @ op @ x))
    return float(np.real(np.trace(x @ op)))


def hv_vertices():
    """Every deterministic partially separable vertex at n = 3.

    Yields (pair, single, table) where ``table(i, j, k)`` returns the value
    of the product term with choices i, j, k in {0, 1}.
    """
    for pair in ((0, 1), (0, 2), (1, 2)):
        (single,) = {0, 1, 2} - set(pair)
        for bits in itertools.product((1, -1), repeat=6):
            pv = {(0, 0): bits[0], (0, 1): bits[1], (1, 0): bits[2], (1, 1): bits[3]}
            sv = {0: bits[4], 1: bits[5]}

            def table(*choice, pv=pv, sv=sv, pair=pair, single=single):
                return pv[(choice[pair[0]], choice[pair[1]])] * sv[choice[single]]

            yield pair, single, table


def local_vertices():
    for bits in itertools.product((1, -1), repeat=6):
        def table(i, j, k, bits=bits):
            return bits[i] * bits[2 + j] * bits[4 + k]
        yield table


def hv_value(table, terms: dict) -> Fraction:
    return sum(Fraction(c) * table(*(0 if ch == "u" else 1 for ch in choice)) for choice, c in terms.items())

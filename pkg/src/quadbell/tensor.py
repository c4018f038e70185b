"""Qubit states, Pauli observables and the small amount of linear algebra
everything else is built on.

Conventions
-----------
Particles are indexed from 0. Particle 0 is the most significant bit of a
computational-basis index, so ``|s_0 s_1 ... s_{n-1}>`` sits at index
``sum(s_j * 2 ** (n - 1 - j))``. Spin up ``|↑>`` is ``|0>``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

CONSTRUCT_TOL = 1e-12
DERIVED_TOL = 1e-10
POSITIVITY_TOL = 1e-10
POSITIVITY_MAX_DIM = 64
MAX_DENSE_QUBITS = 10
MAX_PURE_QUBITS = 20

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


class StateError(ValueError):
    """Raised for malformed states, partitions or dimension mismatches."""


@dataclass(frozen=True)
class UnitVector3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(norm2) or abs(norm2 - 1.0) > CONSTRUCT_TOL:
            raise ValueError(f"not a unit vector: ({self.x}, {self.y}, {self.z})")

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> UnitVector3:
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    @classmethod
    def planar(cls, phi: float) -> UnitVector3:
        """Unit vector in the x-y plane at azimuth ``phi``."""
        return cls(math.cos(phi), math.sin(phi), 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def pauli_observable(u) -> np.ndarray:
    """Spin observable ``u . sigma`` for a unit vector ``u``.

    ``u`` may be a :class:`UnitVector3` or any length-3 sequence; a plain
    sequence is normalisation-checked the same way.
    """
    if not isinstance(u, UnitVector3):
        u = UnitVector3(*(float(c) for c in u))
    return u.x * SIGMA_X + u.y * SIGMA_Y + u.z * SIGMA_Z


def pauli_batch(vectors: np.ndarray) -> np.ndarray:
    """Vectorised ``v . sigma`` over the leading axes of ``(..., 3)`` input.

    No normalisation check; callers own that.
    """
    return np.einsum("...c,cij->...ij", vectors, PAULI)


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(A, B)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def is_hermitian(M: np.ndarray, tol: float = CONSTRUCT_TOL) -> bool:
    return M.shape[0] == M.shape[1] and float(np.max(np.abs(M - M.conj().T), initial=0.0)) <= tol


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise StateError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure state vector or a density matrix on ``n`` qubits.

    Build instances with :meth:`pure` or :meth:`mixed`, which validate;
    the bare constructor trusts its input.
    """

    n: int
    kind: str  # "pure" | "mixed"
    data: np.ndarray

    @classmethod
    def pure(cls, vector, *, normalize: bool = False) -> QuantumState:
        v = np.array(vector, dtype=complex).reshape(-1)
        n = _num_qubits(v.size) if v.size != 1 else 0
        if n > MAX_PURE_QUBITS:
            raise StateError(f"pure states are limited to {MAX_PURE_QUBITS} qubits")
        norm = float(np.linalg.norm(v))
        if normalize:
            if norm == 0:
                raise StateError("cannot normalise the zero vector")
            v = v / norm
        elif abs(norm - 1.0) > CONSTRUCT_TOL:
            raise StateError(f"state vector has norm {norm!r}, expected 1")
        v.setflags(write=False)
        return cls(n, "pure", v)

    @classmethod
    def mixed(cls, rho, *, check_positivity: bool = True) -> QuantumState:
        rho = np.array(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise StateError("density matrix must be square")
        n = _num_qubits(rho.shape[0])
        if n > MAX_DENSE_QUBITS:
            raise StateError(f"density matrices are limited to {MAX_DENSE_QUBITS} qubits")
        if not is_hermitian(rho):
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > CONSTRUCT_TOL:
            raise StateError(f"density matrix has trace {tr!r}, expected 1")
        if check_positivity and rho.shape[0] <= POSITIVITY_MAX_DIM:
            lo = float(np.linalg.eigvalsh(rho)[0])
            if lo < -POSITIVITY_TOL:
                raise StateError(f"density matrix has negative eigenvalue {lo!r}")
        rho.setflags(write=False)
        return cls(n, "mixed", rho)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def as_mixed(self) -> QuantumState:
        if not self.is_pure:
            return self
        rho = self.density()
        rho.setflags(write=False)
        return QuantumState(self.n, "mixed", rho)

    # serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        flat = self.data.reshape(-1)
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        return {"n": self.n, "kind": self.kind, "data": inter.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> QuantumState:
        try:
            n, kind, raw = int(doc["n"]), doc["kind"], np.asarray(doc["data"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise StateError(f"malformed state document: {exc}") from None
        if raw.size % 2:
            raise StateError("interleaved data must have even length")
        flat = raw[0::2] + 1j * raw[1::2]
        d = 1 << n
        if kind == "pure":
            if flat.size != d:
                raise StateError(f"expected {d} amplitudes, got {flat.size}")
            return cls.pure(flat)
        if kind == "mixed":
            if flat.size != d * d:
                raise StateError(f"expected {d * d} matrix entries, got {flat.size}")
            return cls.mixed(flat.reshape(d, d))
        raise StateError(f"unknown state kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> QuantumState:
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def expectation(op: np.ndarray, state: QuantumState) -> float:
    """``Tr(rho op)`` or ``<psi|op|psi>`` for a Hermitian ``op``."""
    op = np.asarray(op)
    if op.shape != (state.dim, state.dim):
        raise StateError(f"operator shape {op.shape} does not match a {state.n}-qubit state")
    if not is_hermitian(op, 1e-10 * max(1.0, float(np.max(np.abs(op), initial=0.0)))):
        raise ValueError("operator is not Hermitian")
    if state.is_pure:
        val = np.vdot(state.data, op @ state.data)
    else:
        val = np.einsum("ij,ji->", state.data, op)
    if abs(val.imag) > DERIVED_TOL * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation has imaginary residue {val.imag!r}")
    return float(val.real)


# named states ---------------------------------------------------------------

def basis_state(bits: Sequence[int]) -> QuantumState:
    idx = 0
    for b in bits:
        idx = 2 * idx + int(b)
    v = np.zeros(1 << len(bits), dtype=complex)
    v[idx] = 1.0
    return QuantumState.pure(v)


def ghz_state(n: int, phase: int = +1) -> QuantumState:
    """``(|↑...↑> + phase |↓...↓>) / sqrt(2)`` with ``phase`` in {+1, -1}."""
    if n < 2:
        raise StateError("GHZ state needs n >= 2")
    if phase not in (1, -1):
        raise ValueError("phase must be +1 or -1")
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1 / math.sqrt(2)
    v[-1] = phase / math.sqrt(2)
    return QuantumState.pure(v)


def singlet() -> QuantumState:
    return QuantumState.pure(np.array([0, 1, -1, 0]) / math.sqrt(2))


def w_state(n: int) -> QuantumState:
    v = np.zeros(1 << n, dtype=complex)
    for j in range(n):
        v[1 << j] = 1.0
    return QuantumState.pure(v, normalize=True)


def maximally_mixed(n: int) -> QuantumState:
    d = 1 << n
    return QuantumState.mixed(np.eye(d) / d, check_positivity=False)


# composition ----------------------------------------------------------------

def _check_partition(partition: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    groups = tuple(tuple(int(j) for j in g) for g in partition)
    flat = [j for g in groups for j in g]
    if any(len(g) == 0 for g in groups) or sorted(flat) != list(range(len(flat))):
        raise StateError(f"partition {partition!r} must cover particles 0..n-1 exactly once")
    return groups


def compose_state(parts: Sequence[QuantumState], partition: Sequence[Sequence[int]]) -> QuantumState:
    """Tensor product of ``parts`` with ``parts[i]`` living on ``partition[i]``.

    Groups may be non-contiguous; qubits are permuted so particle ``j``
    ends up in slot ``j``. Within a group the factor's qubit order follows
    the order the group lists its particles.
    """
    groups = _check_partition(partition)
    if len(parts) != len(groups):
        raise StateError("one part per group required")
    for p, g in zip(parts, groups):
        if p.n != len(g):
            raise StateError(f"part on {g} has {p.n} qubits")
    n = sum(len(g) for g in groups)
    order = [j for g in groups for j in g]
    perm = np.argsort(order)
    if all(p.is_pure for p in parts):
        v = kron_all([p.data.reshape(-1, 1) for p in parts]).reshape((2,) * n)
        v = np.transpose(v, perm).reshape(-1)
        return QuantumState.pure(v, normalize=False)
    rho = kron_all([p.density() for p in parts]).reshape((2,) * (2 * n))
    rho = np.transpose(rho, list(perm) + [n + k for k in perm]).reshape(1 << n, 1 << n)
    return QuantumState.mixed(rho, check_positivity=False)


def partial_trace(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    """Reduced state on the particles in ``keep`` (in the order given)."""
    keep = [int(j) for j in keep]
    n = state.n
    if len(set(keep)) != len(keep) or any(not 0 <= j < n for j in keep) or not keep:
        raise StateError(f"invalid particle subset {keep!r}")
    rest = [j for j in range(n) if j not in keep]
    dk, dr = 1 << len(keep), 1 << len(rest)
    if state.is_pure:
        m = np.transpose(state.data.reshape((2,) * n), keep + rest).reshape(dk, dr)
        red = m @ m.conj().T
    else:
        t = state.data.reshape((2,) * (2 * n))
        t = np.transpose(t, keep + rest + [n + j for j in keep] + [n + j for j in rest])
        red = np.einsum("arbr->ab", t.reshape(dk, dr, dk, dr))
    return QuantumState.mixed(red, check_positivity=False)


def mixture(weights: Sequence[float], states: Sequence[QuantumState]) -> QuantumState:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) != len(states) or len(w) == 0:
        raise StateError("need one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > CONSTRUCT_TOL:
        raise StateError("weights must be nonnegative and sum to 1")
    n = states[0].n
    if any(s.n != n for s in states):
        raise StateError("all states must have the same particle count")
    rho = sum(wi * s.density() for wi, s in zip(w, states))
    return QuantumState.mixed(rho, check_positivity=False)


# sampling -------------------------------------------------------------------

def rng_for(seed: int, index: int | None = None) -> np.random.Generator:
    """Generator for sample ``index`` of a run seeded with ``seed``.

    Streams are split with ``SeedSequence(seed, spawn_key=(index,))``, so
    sample ``i`` is reproducible independently of how many others are drawn.
    """
    if index is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def ginibre_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def bipartitions(n: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All nontrivial bipartitions ``(G, complement)`` with particle 0 in ``G``."""
    out = []
    others = list(range(1, n))
    for size in range(0, n - 1):
        for extra in combinations(others, size):
            g = (0,) + extra
            out.append((g, tuple(j for j in range(n) if j not in g)))
    return out


def random_state(n: int, kind: str = "pure-haar", seed=None, *,
                 mixture_size: int = 1, part_kind: str = "pure-haar") -> QuantumState:
    """Draw a random state.

    kind
        ``pure-haar``: normalised complex Gaussian vector.
        ``mixed-ginibre``: ``G G^† / Tr`` for square complex Gaussian ``G``.
        ``biseparable``: product across a uniformly chosen nontrivial
        bipartition, with random ``part_kind`` factors; with
        ``mixture_size > 1`` several such draws are mixed with
        Dirichlet(1, ..., 1) weights.
    """
    if n < 1:
        raise StateError("n must be >= 1")
    rng = _as_rng(seed)
    d = 1 << n
    if kind == "pure-haar":
        return QuantumState.pure(haar_vector(d, rng), normalize=True)
    if kind == "mixed-ginibre":
        return QuantumState.mixed(ginibre_density(d, rng), check_positivity=False)
    if kind == "biseparable":
        if n < 2:
            raise StateError("biseparable states need n >= 2")
        cuts = bipartitions(n)
        draws = []
        for _ in range(mixture_size):
            g, h = cuts[rng.integers(len(cuts))]
            parts = [random_state(len(g), part_kind, rng), random_state(len(h), part_kind, rng)]
            draws.append(compose_state(parts, [g, h]))
        if mixture_size == 1:
            return draws[0]
        w = rng.dirichlet(np.ones(mixture_size))
        w = w / w.sum()
        return mixture(w, draws)
    raise ValueError(f"unknown random state kind {kind!r}")


def random_unit_vectors(shape, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# Schmidt form ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """``|psi> = p |phi_1>|chi_1> - q |phi_2>|chi_2>`` with ``p >= q >= 0``.

    ``basis1`` and ``basis2`` hold the local basis vectors as columns.
    """

    p: float
    q: float
    basis1: np.ndarray
    basis2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        b1, b2 = self.basis1, self.basis2
        return self.p * np.kron(b1[:, 0], b2[:, 0]) - self.q * np.kron(b1[:, 1], b2[:, 1])

    def frame_unitaries(self) -> tuple[np.ndarray, np.ndarray]:
        """Local unitaries taking the state to ``p|↑↓> - q|↓↑>``.

        Particle 1's frame has ``phi_1`` up; particle 2's frame has
        ``chi_1`` down. In these frames two-particle correlations follow
        :func:`schmidt_frame_correlator`.
        """
        U1 = self.basis1.conj().T
        U2 = np.array([self.basis2[:, 1].conj(), self.basis2[:, 0].conj()])
        return U1, U2


def schmidt_decompose(state: QuantumState) -> SchmidtForm:
    if not state.is_pure or state.n != 2:
        raise StateError("Schmidt decomposition needs a pure two-qubit state")
    U, s, Vh = np.linalg.svd(state.data.reshape(2, 2))
    p, q = float(s[0]), float(s[1])
    # renormalise away rounding so p^2 + q^2 == 1 to machine precision
    r = math.hypot(p, q)
    p, q = p / r, q / r
    basis1 = U.copy()
    basis2 = np.column_stack([Vh[0], -Vh[1]])
    return SchmidtForm(p, q, basis1, basis2)


def bloch_rotation(U: np.ndarray) -> np.ndarray:
    """Rotation ``R`` with ``U (v.sigma) U^† = (R v).sigma``."""
    return np.real(np.einsum("iab,bc,jcd,da->ij", PAULI, U, PAULI, U.conj().T)) / 2


def schmidt_frame_correlator(p: float, q: float, a, b) -> float:
    """``<psi| a.sigma (x) b.sigma |psi>`` for ``psi = p|↑↓> - q|↓↑>``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(-a[2] * b[2] - 2 * p * q * (a[0] * b[0] + a[1] * b[1]))

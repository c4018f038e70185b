"""Linear and quadratic Bell quantities as full-entanglement witnesses.

For ``n >= 3`` particles, a state that is a product across some bipartition
(or a mixture of such products) satisfies

    <S+>² + <S->² <= 2^(2n-2)        and    <F>² + <F'>² <= 2^n,

while every quantum state satisfies ``<S+>² + <S->² <= 2^(2n-1)``. Exceeding
the first bound certifies that the state is fully entangled.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from quadbell.operators import MeasurementSettings, chsh_xy, pair_expectations
from quadbell.tensor import QuantumState, StateError, expectation

SCHEMA_VERSION = 1
VERDICT_TOL = 1e-9
IDENTITY_RTOL = 1e-8

CERTIFIED = "certified-fully-entangled"
INCONCLUSIVE = "inconclusive"


class ConsistencyError(ArithmeticError):
    """The F-route and S-route quadratic quantities disagree."""


# bounds, all computed from n ------------------------------------------------

def quadratic_s_bounds(n: int) -> tuple[float, float]:
    """(biseparable, any state) bounds on ``<S+>² + <S->²``."""
    return 2.0 ** (2 * n - 2), 2.0 ** (2 * n - 1)


def quadratic_f_bounds(n: int) -> tuple[float, float]:
    """(biseparable, any state) bounds on ``<F>² + <F'>²``."""
    return 2.0 ** n, 2.0 ** (n + 1)


def linear_s_bounds(n: int) -> tuple[float, float]:
    return 2.0 ** (n - 1), 2.0 ** (n - 1) * math.sqrt(2)


def linear_f_bounds(n: int) -> tuple[float, float]:
    return 2.0 ** (n / 2), 2.0 ** ((n + 1) / 2)


@dataclass
class WitnessReport:
    n: int
    f: float
    fprime: float
    splus: float
    sminus: float
    q_f: float
    q_s: float
    bound_biseparable_s: float
    bound_global_s: float
    bound_biseparable_f: float
    bound_global_f: float
    linear_s_bounds: tuple[float, float]
    linear_f_bounds: tuple[float, float]
    verdict: str
    margin: float

    def to_dict(self, settings: MeasurementSettings | None = None,
                state: QuantumState | None = None) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        out.update(asdict(self))
        out["linear_s_bounds"] = list(self.linear_s_bounds)
        out["linear_f_bounds"] = list(self.linear_f_bounds)
        if settings is not None:
            out["settings"] = settings.to_dict()["pairs"]
        if state is not None:
            out["state_digest"] = state.digest()
        return out

    def to_json(self, settings=None, state=None) -> str:
        return json.dumps(self.to_dict(settings, state), indent=2)


def _check(state: QuantumState, settings: MeasurementSettings, n_min: int):
    if state.n < n_min:
        raise StateError(f"need at least {n_min} particles, got {state.n}")
    if settings.n != state.n:
        raise StateError(f"settings for {settings.n} particles, state has {state.n}")


def report_from_values(n: int, f: float, fp: float, sp: float, sm: float) -> WitnessReport:
    q_f = f * f + fp * fp
    q_s = sp * sp + sm * sm
    if abs(q_s - 2.0 ** (n - 2) * q_f) > IDENTITY_RTOL * max(1.0, q_s):
        raise ConsistencyError(f"q_s={q_s!r} but 2^(n-2) q_f={2.0 ** (n - 2) * q_f!r}")
    bs, gs = quadratic_s_bounds(n)
    bf, gf = quadratic_f_bounds(n)
    margin = q_s - bs
    return WitnessReport(
        n=n, f=f, fprime=fp, splus=sp, sminus=sm, q_f=q_f, q_s=q_s,
        bound_biseparable_s=bs, bound_global_s=gs,
        bound_biseparable_f=bf, bound_global_f=gf,
        linear_s_bounds=linear_s_bounds(n), linear_f_bounds=linear_f_bounds(n),
        verdict=CERTIFIED if margin > VERDICT_TOL else INCONCLUSIVE,
        margin=margin,
    )


def evaluate(state: QuantumState, settings: MeasurementSettings) -> WitnessReport:
    _check(state, settings, 3)
    vec = settings.vectors[None]
    f, fp = pair_expectations("F", vec, state.data[None], state.kind)[0]
    sp, sm = pair_expectations("S", vec, state.data[None], state.kind)[0]
    return report_from_values(state.n, float(f), float(fp), float(sp), float(sm))


def evaluate_batch(vectors: np.ndarray, states: np.ndarray, kind: str) -> dict[str, np.ndarray]:
    """Vectorised witness quantities for K (settings, state) pairs.

    ``vectors`` is (K, n, 2, 3); ``states`` (K, D) pure or (K, D, D) mixed.
    """
    f = pair_expectations("F", vectors, states, kind)
    s = pair_expectations("S", vectors, states, kind)
    n = vectors.shape[1]
    q_f = np.sum(f ** 2, axis=1)
    q_s = np.sum(s ** 2, axis=1)
    bad = np.abs(q_s - 2.0 ** (n - 2) * q_f) > IDENTITY_RTOL * np.maximum(1.0, q_s)
    if np.any(bad):
        raise ConsistencyError(f"{int(bad.sum())} samples violate the quadratic identity")
    return {"f": f[:, 0], "fprime": f[:, 1], "splus": s[:, 0], "sminus": s[:, 1],
            "q_f": q_f, "q_s": q_s}


def chsh_quadratic(state: QuantumState, settings: MeasurementSettings) -> tuple[float, float, float]:
    """``x = <AB' + A'B>``, ``y = <AB - A'B'>`` and ``q = x² + y²`` (at most 4)."""
    if state.n != 2:
        raise StateError("chsh_quadratic needs a two-particle state")
    X, Y = chsh_xy(settings)
    x, y = expectation(X, state), expectation(Y, state)
    return x, y, x * x + y * y


@dataclass
class LinearReport:
    n: int
    abs_splus: float
    abs_sminus: float
    max_abs_f: float
    f_plus_fprime: float
    f_minus_fprime: float
    s_bounds: tuple[float, float]
    f_bounds: tuple[float, float]
    violates_s: bool
    violates_f: bool
    exceeds_s_global: bool
    exceeds_f_global: bool

    @property
    def independent_tests(self) -> str:
        """Which of the two linear tests flags the state."""
        if self.violates_s and self.violates_f:
            return "both"
        if self.violates_s:
            return "svetlichny-only"
        if self.violates_f:
            return "mermin-klyshko-only"
        return "neither"


def check_linear(state: QuantumState, settings: MeasurementSettings) -> LinearReport:
    r = evaluate(state, settings)
    n, tol = r.n, VERDICT_TOL
    sb, fb = linear_s_bounds(n), linear_f_bounds(n)
    abs_s = max(abs(r.splus), abs(r.sminus))
    max_f = max(abs(r.f), abs(r.fprime))
    return LinearReport(
        n=n, abs_splus=abs(r.splus), abs_sminus=abs(r.sminus), max_abs_f=max_f,
        f_plus_fprime=r.f + r.fprime, f_minus_fprime=r.f - r.fprime,
        s_bounds=sb, f_bounds=fb,
        violates_s=abs_s > sb[0] + tol, violates_f=max_f > fb[0] + tol,
        exceeds_s_global=abs_s > sb[1] + tol, exceeds_f_global=max_f > fb[1] + tol,
    )

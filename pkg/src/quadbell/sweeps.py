"""Random-sample bound sweeps and setting-rotation scans."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from quadbell import witness
from quadbell.operators import MeasurementSettings, pair_expectations
from quadbell.tensor import QuantumState, random_state, random_unit_vectors, rng_for

SWEEP_TOL = 1e-9
CHUNK = 2000


@dataclass
class BoundCheck:
    name: str
    n: int
    state_class: str
    quantity: str
    samples: int
    max_observed: float
    bound: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def draw_states(n: int, state_class: str, samples: int, seed: int) -> tuple[list[QuantumState], np.ndarray]:
    """States and random settings for ``samples`` draws.

    ``arbitrary`` alternates Haar-random pure states and Ginibre mixed
    states; ``biseparable`` alternates single pure products across a random
    bipartition and Dirichlet mixtures of three mixed products. Sample
    ``i`` uses ``rng_for(seed, i)``.
    """
    states, vecs = [], np.empty((samples, n, 2, 3))
    for i in range(samples):
        rng = rng_for(seed, i)
        if state_class == "arbitrary":
            kind = "pure-haar" if i % 2 == 0 else "mixed-ginibre"
            st = random_state(n, kind, rng)
        elif state_class == "biseparable":
            if i % 2 == 0:
                st = random_state(n, "biseparable", rng)
            else:
                st = random_state(n, "biseparable", rng, mixture_size=3, part_kind="mixed-ginibre")
        else:
            raise ValueError(f"unknown state class {state_class!r}")
        states.append(st)
        vecs[i] = random_unit_vectors((n, 2), rng)
    return states, vecs


def batch_pair(pair: str, states: list[QuantumState], vecs: np.ndarray) -> np.ndarray:
    """(K, 2) expectations of a family pair, batching pure and mixed states separately."""
    out = np.empty((len(states), 2))
    for kind in ("pure", "mixed"):
        idx = [i for i, s in enumerate(states) if s.kind == kind]
        for lo in range(0, len(idx), CHUNK):
            sel = idx[lo:lo + CHUNK]
            data = np.stack([states[i].data for i in sel])
            out[sel] = pair_expectations(pair, vecs[sel], data, kind)
    return out


def _check(name, n, cls, quantity, values, bound) -> BoundCheck:
    m = float(np.max(values)) if len(values) else -math.inf
    return BoundCheck(name, n, cls, quantity, len(values), m, bound, bool(m <= bound + SWEEP_TOL))


def bound_sweep(n: int, samples: int = 10_000, seed: int = 0) -> list[BoundCheck]:
    """Largest observed value of every applicable inequality over random draws."""
    checks = []
    if n == 2:
        states, vecs = draw_states(2, "arbitrary", samples, seed)
        f = batch_pair("F", states, vecs)
        # F_2 = X + Y and F'_2 = X - Y
        q = (f[:, 0] ** 2 + f[:, 1] ** 2) / 2
        checks.append(_check("quadratic-chsh", 2, "arbitrary", "x^2+y^2", q, 4.0))
        checks.append(_check("chsh-quantum", 2, "arbitrary", "|<CHSH>|", np.abs(f[:, 0]), 2 * math.sqrt(2)))
        states, vecs = draw_states(2, "biseparable", samples, seed + 1)
        f = batch_pair("F", states, vecs)
        checks.append(_check("chsh-product", 2, "biseparable", "|<CHSH>|", np.abs(f[:, 0]), 2.0))
        return checks
    if n < 2:
        raise ValueError("bound sweeps need n >= 2")
    for cls, offset in (("arbitrary", 0), ("biseparable", 1)):
        states, vecs = draw_states(n, cls, samples, seed + offset)
        f = batch_pair("F", states, vecs)
        s = batch_pair("S", states, vecs)
        q_f = np.sum(f ** 2, axis=1)
        q_s = np.sum(s ** 2, axis=1)
        both = np.abs(q_s - 2.0 ** (n - 2) * q_f) > witness.IDENTITY_RTOL * np.maximum(1.0, q_s)
        if np.any(both):
            raise witness.ConsistencyError("quadratic identity failed inside a sweep")
        i = 0 if cls == "biseparable" else 1
        checks += [
            _check(f"quadratic-s-{cls}", n, cls, "<S+>^2+<S->^2", q_s, witness.quadratic_s_bounds(n)[i]),
            _check(f"quadratic-f-{cls}", n, cls, "<F>^2+<F'>^2", q_f, witness.quadratic_f_bounds(n)[i]),
            _check(f"mermin-klyshko-{cls}", n, cls, "max(|<F>|,|<F'>|)", np.max(np.abs(f), axis=1),
                   witness.linear_f_bounds(n)[i]),
            _check(f"svetlichny-{cls}", n, cls, "max(|<S+>|,|<S->|)", np.max(np.abs(s), axis=1),
                   witness.linear_s_bounds(n)[i]),
        ]
    return checks


def checks_csv(checks: list[BoundCheck]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(BoundCheck.__dataclass_fields__) + ["schema_version"],
                       lineterminator="\n")
    w.writeheader()
    for c in checks:
        w.writerow({**c.as_dict(), "schema_version": witness.SCHEMA_VERSION})
    return buf.getvalue()


def rotate_z(v: np.ndarray, t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return v @ R.T


def scan(state: QuantumState, settings: MeasurementSettings, steps: int = 256,
         particle: int = 0) -> list[dict]:
    """Rotate one particle's setting pair about z through a full turn.

    Returns rows ``{t, f, fprime, q_f, q_s}`` tracing the ``(<F>, <F'>)``
    plane (``q_s`` only for n >= 3).
    """
    n = state.n
    ts = np.linspace(0.0, 2 * math.pi, steps, endpoint=False)
    vecs = np.repeat(settings.vectors[None], steps, axis=0)
    for k, t in enumerate(ts):
        vecs[k, particle] = rotate_z(settings.vectors[particle], t)
    data = np.repeat(state.data[None], steps, axis=0)
    f = pair_expectations("F", vecs, data, state.kind)
    s = pair_expectations("S", vecs, data, state.kind) if n >= 3 else np.full((steps, 2), math.nan)
    rows = []
    for k, t in enumerate(ts):
        rows.append({"t": float(t), "f": float(f[k, 0]), "fprime": float(f[k, 1]),
                     "q_f": float(f[k, 0] ** 2 + f[k, 1] ** 2),
                     "q_s": float(s[k, 0] ** 2 + s[k, 1] ** 2)})
    return rows


def rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) + ["schema_version"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            row = {k: repr(v) if isinstance(v, float) else v for k, v in r.items()}
            w.writerow({**row, "schema_version": witness.SCHEMA_VERSION})
    return buf.getvalue()


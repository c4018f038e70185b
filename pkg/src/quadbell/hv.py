"""Partially separable deterministic hidden-variable models.

For each hidden value the particles split into blocks. Every correlator
of observables inside a block gets a fixed value +-1, with no requirement
that it factor into single-particle outcomes; correlators spanning blocks
are products of the block values. Two blocks give a partially separable
model, all-singleton blocks a fully local one.

Sums are done in exact rational arithmetic; floats appear only when a
result is returned.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from quadbell.operators import TermExpansion, family_terms
from quadbell.tensor import bipartitions
from quadbell.witness import SCHEMA_VERSION


class MissingCorrelator(KeyError):
    pass


def _block_choices(size: int) -> list[str]:
    return ["".join(c) for c in itertools.product("up", repeat=size)]


@dataclass(frozen=True)
class DeterministicAssignment:
    """Block structure plus a +-1 value per within-block correlator.

    ``values[i]`` maps a choice string over ``blocks[i]`` (in the order the
    block lists its particles) to +1 or -1; e.g. for block ``(0, 1)`` the
    key ``"up"`` is the value of ``A B'``.
    """

    blocks: tuple[tuple[int, ...], ...]
    values: tuple[dict, ...]

    def __post_init__(self):
        flat = sorted(j for b in self.blocks for j in b)
        if flat != list(range(len(flat))) or any(not b for b in self.blocks):
            raise ValueError(f"blocks {self.blocks!r} do not partition the particles")
        if len(self.values) != len(self.blocks):
            raise ValueError("one value table per block")
        for table in self.values:
            if any(v not in (1, -1) for v in table.values()):
                raise ValueError("correlator values must be +1 or -1")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def term_value(self, choice: str) -> int:
        out = 1
        for block, table in zip(self.blocks, self.values):
            key = "".join(choice[j] for j in block)
            try:
                out *= table[key]
            except KeyError:
                raise MissingCorrelator(f"no value for {key!r} on block {block}") from None
        return out

    def value(self, expansion: TermExpansion) -> Fraction:
        return sum((c * self.term_value(ch) for c, ch in expansion.terms), Fraction(0))

    def negated(self) -> DeterministicAssignment:
        """Every correlator value flipped. Terms flip iff the block count is odd."""
        return DeterministicAssignment(self.blocks, tuple({k: -v for k, v in t.items()} for t in self.values))

    def bits(self) -> str:
        """Values as a 0/1 string (1 means -1), blocks in order, keys in u<p order."""
        out = []
        for block, table in zip(self.blocks, self.values):
            out.extend("1" if table[k] < 0 else "0" for k in _block_choices(len(block)))
        return "".join(out)

    def label(self) -> str:
        return "|".join("".join(str(j) for j in b) for b in self.blocks)


@dataclass(frozen=True)
class HVModel:
    assignments: tuple[DeterministicAssignment, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.assignments) != len(self.weights) or not self.assignments:
            raise ValueError("one weight per assignment")
        if any(w < 0 for w in self.weights) or sum(self.weights) != 1:
            raise ValueError("weights must be nonnegative and sum to 1")
        n = self.assignments[0].n
        if any(a.n != n for a in self.assignments):
            raise ValueError("assignments disagree on particle count")

    @property
    def n(self) -> int:
        return self.assignments[0].n


def eval_hv_exact(model: HVModel, expansion: TermExpansion) -> Fraction:
    if expansion.n != model.n:
        raise ValueError(f"{expansion.n}-particle expression, {model.n}-particle model")
    return sum((w * a.value(expansion) for a, w in zip(model.assignments, model.weights)), Fraction(0))


def eval_hv(model: HVModel, expansion: TermExpansion) -> float:
    """``sum_lambda w(lambda) sum_terms coeff * value(term | lambda)``."""
    return float(eval_hv_exact(model, expansion))


def counterexample_model() -> HVModel:
    """Two equally likely hidden values, blocks {0,1} | {2}.

    First value: AB = AB' = A'B = C = 1 and A'B' = C' = -1; the second
    negates all of them.
    """
    pair = {"uu": 1, "up": 1, "pu": 1, "pp": -1}
    single = {"u": 1, "p": -1}
    first = DeterministicAssignment(((0, 1), (2,)), (pair, single))
    half = Fraction(1, 2)
    return HVModel((first, first.negated()), (half, half))


def chsh_xy_hv(assignment: DeterministicAssignment, pair=(0, 1)) -> tuple[int, int]:
    """``x = v(AB') + v(A'B)`` and ``y = v(AB) - v(A'B')`` for two particles
    inside one block."""
    for block, table in zip(assignment.blocks, assignment.values):
        if set(pair) <= set(block):
            i, j = block.index(pair[0]), block.index(pair[1])

            def v(ci, cj):
                key = ["u"] * len(block)
                key[i], key[j] = ci, cj
                # other block members fixed to unprimed
                return table["".join(key)]

            return v("u", "p") + v("p", "u"), v("u", "u") - v("p", "p")
    raise ValueError(f"particles {pair} do not share a block")


# enumeration ----------------------------------------------------------------

def enumerate_assignments(n: int = 3, *, local_only: bool = False) -> list[DeterministicAssignment]:
    """All deterministic vertices: per bipartition, every +-1 table on each block."""
    if n != 3:
        raise ValueError("enumeration is implemented for n = 3 only")
    structures = [tuple((j,) for j in range(n))] if local_only else [c for c in bipartitions(n)]
    out = []
    for blocks in structures:
        keys = [_block_choices(len(b)) for b in blocks]
        sizes = [len(k) for k in keys]
        for signs in itertools.product((1, -1), repeat=sum(sizes)):
            tables, pos = [], 0
            for ks in keys:
                tables.append(dict(zip(ks, signs[pos:pos + len(ks)])))
                pos += len(ks)
            out.append(DeterministicAssignment(tuple(blocks), tuple(tables)))
    return out


@dataclass
class EnumerationResult:
    expressions: list[str]
    vertices: list[DeterministicAssignment]
    values: np.ndarray  # (num_vertices, num_expressions), exact integers/rationals as float
    maxima: list[float]
    argmax: list[int]
    quadratic_max: float | None = None
    quadratic_witness: tuple[int, int, float] | None = None  # (vertex i, vertex j, weight on i)

    def witness(self, k: int = 0) -> DeterministicAssignment:
        return self.vertices[self.argmax[k]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bipartition", "assignment_bits"] + self.expressions + ["schema_version"])
        for v, row in zip(self.vertices, self.values):
            w.writerow([v.label(), v.bits()] + [f"{x:g}" for x in row] + [SCHEMA_VERSION])
        return buf.getvalue()


EXPRESSIONS = {"f3": "F", "f3prime": "Fprime", "s3plus": "Splus", "s3minus": "Sminus"}


def expression(name: str) -> TermExpansion:
    try:
        return family_terms(EXPRESSIONS[name], 3)
    except KeyError:
        raise KeyError(f"unknown expression {name!r}; choose from {sorted(EXPRESSIONS)}") from None


def brute_force_ps_max(expansions: Sequence[TermExpansion], names: Sequence[str] | None = None, *,
                       quadratic: bool = False, local_only: bool = False,
                       grid: int = 65) -> EnumerationResult:
    """Maximise over the three-particle partially separable polytope.

    Linear maxima are exact (attained at a vertex). With ``quadratic``,
    the sum of squares of the expressions is maximised over vertices and
    over a ``grid``-point scan of every two-vertex mixture; that value is a
    lower bound on the polytope maximum.
    """
    if any(e.n != 3 for e in expansions):
        raise ValueError("brute force enumeration is for n = 3 only")
    names = list(names) if names is not None else [e.family or f"expr{i}" for i, e in enumerate(expansions)]
    vertices = enumerate_assignments(3, local_only=local_only)
    vals = np.array([[int(a.value(e)) if a.value(e).denominator == 1 else float(a.value(e))
                      for e in expansions] for a in vertices], dtype=float)
    argmax = [int(np.argmax(vals[:, k])) for k in range(len(expansions))]
    result = EnumerationResult(names, vertices, vals, [float(vals[i, k]) for k, i in enumerate(argmax)], argmax)
    if quadratic:
        q_vertex = np.sum(vals ** 2, axis=1)
        best_i = int(np.argmax(q_vertex))
        best = (float(q_vertex[best_i]), best_i, best_i, 1.0)
        w = np.linspace(0.0, 1.0, grid)
        uniq, inv = np.unique(vals, axis=0, return_index=True)
        # mixtures only depend on the value vectors, so scan distinct ones
        for a in range(len(uniq)):
            mix = w[:, None, None] * uniq[a] + (1 - w[:, None, None]) * uniq[None, :, :]
            q = np.sum(mix ** 2, axis=-1)
            k = np.unravel_index(int(np.argmax(q)), q.shape)
            if q[k] > best[0]:
                best = (float(q[k]), int(inv[a]), int(inv[k[1]]), float(w[k[0]]))
        result.quadratic_max = best[0]
        result.quadratic_witness = best[1:]
    return result

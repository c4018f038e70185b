"""Named states and measurement settings used by the CLI and the tests."""

from __future__ import annotations

import math
import re

import numpy as np

from quadbell.operators import MeasurementSettings
from quadbell.tensor import (
    QuantumState,
    basis_state,
    ghz_state,
    maximally_mixed,
    singlet,
    w_state,
)

X = (1.0, 0.0, 0.0)
Y = (0.0, 1.0, 0.0)
Z = (0.0, 0.0, 1.0)

# States the source analysis does not discuss; flagged in CLI output.
PROBE_STATES = {"w"}


def planar(phi: float) -> tuple[float, float, float]:
    return (math.cos(phi), math.sin(phi), 0.0)


def named_state(name: str, n: int | None = None) -> QuantumState:
    """Resolve ``ghz3``, ``ghz4-``, ``singlet``, ``sep3-up``, ``mixed-max``, ``w3``...

    ``mixed-max`` takes its size from ``n`` (default 3) unless written
    ``mixed-max4``.
    """
    m = re.fullmatch(r"ghz(\d+)([+-]?)", name)
    if m:
        return ghz_state(int(m.group(1)), -1 if m.group(2) == "-" else +1)
    if name == "singlet":
        return singlet()
    m = re.fullmatch(r"sep(\d+)-up", name)
    if m:
        return basis_state([0] * int(m.group(1)))
    m = re.fullmatch(r"mixed-max(\d*)", name)
    if m:
        return maximally_mixed(int(m.group(1) or n or 3))
    m = re.fullmatch(r"w(\d+)", name)
    if m:
        return w_state(int(m.group(1)))
    raise KeyError(f"unknown state fixture {name!r}")


def state_family(name: str) -> str:
    return re.sub(r"[\d+-]+$", "", name).rstrip("-")


def all_z(n: int) -> MeasurementSettings:
    return MeasurementSettings.uniform(n, Z, Z)


def mermin_xy(n: int) -> MeasurementSettings:
    """``A_j = sigma_y``, ``A'_j = sigma_x`` on every particle."""
    return MeasurementSettings.uniform(n, Y, X)


def chsh_planar() -> MeasurementSettings:
    """x-y plane azimuths a=0°, a'=90°, b=225°, b'=135°."""
    d = math.radians
    return MeasurementSettings.from_pairs([(planar(0), planar(d(90))),
                                           (planar(d(225)), planar(d(135)))])


def svetlichny_opt(n: int = 3) -> MeasurementSettings:
    """Settings giving ``<S+_3> = 4 sqrt(2)`` on ``ghz3``.

    Planar pairs ``(phi_j, phi_j + pi/2)`` with azimuths summing to pi/4;
    on ``ghz3`` the correlator of planar settings is ``cos(sum of azimuths)``.
    Optimizer runs land on planar quadrature pairs too, sometimes with the
    opposite rotation sense.
    """
    if n != 3:
        raise ValueError("svetlichny-opt is pinned for n=3 only")
    phis = [math.pi / 4, 0.0, 0.0]
    return MeasurementSettings.from_pairs([(planar(p), planar(p + math.pi / 2)) for p in phis])


def named_settings(name: str, n: int, seed: int | None = None) -> MeasurementSettings:
    if name == "all-z":
        return all_z(n)
    if name == "mermin-xy":
        return mermin_xy(n)
    if name == "chsh-planar":
        if n != 2:
            raise ValueError("chsh-planar is a two-particle fixture")
        return chsh_planar()
    if name == "svetlichny-opt":
        return svetlichny_opt(n)
    if name == "random":
        return MeasurementSettings.random(n, np.random.default_rng(seed))
    raise KeyError(f"unknown settings fixture {name!r}")

import math

import numpy as np
import pytest

from quadbell import witness
from quadbell.optimize import (
    OBJECTIVES,
    BoundExceeded,
    OptimizationConfig,
    PlanarAngles,
    _check_cap,
    canonical_angles,
    coplanarity_check,
    evaluate_objective,
    objective_cap,
    optimize_over_biseparable,
    optimize_settings,
    planar_quadratic_value,
    schmidt_extremality_sweep,
    settings_from_angles,
)
from quadbell.fixtures import chsh_planar
from quadbell.operators import MeasurementSettings
from quadbell.tensor import StateError, ghz_state, random_state, singlet

R2 = math.sqrt(2)
PI = math.pi

# optimizer output for ghz3 / abs_s_plus / seed 0 / one restart
PINNED_SVETLICHNY_ANGLES = [
    [1.570796317628751, 5.887842388386615, 1.5707963363921689, 4.317046060020283],
    [1.5707963227609036, 1.0233452240239684, 1.570796336044873, 5.735734210185198],
    [1.570796329500744, 1.7281921817980352, 1.5707963121663882, 0.1573958593828926],
]


def cfg(objective, **kw):
    kw.setdefault("restarts", 2)
    return OptimizationConfig(objective=objective, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizationConfig("nope")
    with pytest.raises(ValueError):
        OptimizationConfig("q_s", restarts=0)
    with pytest.raises(ValueError):
        OptimizationConfig("q_s", tolerance=0)
    assert OptimizationConfig("chsh_quadratic").use_planar()
    assert not OptimizationConfig("q_s").use_planar()


def test_objective_compatibility():
    with pytest.raises(StateError):
        optimize_settings(ghz_state(3), cfg("chsh"))
    with pytest.raises(StateError):
        optimize_settings(singlet(), cfg("q_s"))


def test_singlet_chsh():
    r = optimize_settings(singlet(), cfg("chsh"))
    assert abs(r.value - 2 * R2) < 1e-6


@pytest.mark.parametrize("objective,target,tol", [
    ("abs_f", 4.0, 1e-6), ("abs_s_plus", 4 * R2, 1e-6), ("q_s", 32.0, 1e-5), ("q_f", 16.0, 1e-5),
])
def test_ghz3_extremes(objective, target, tol):
    r = optimize_settings(ghz_state(3), cfg(objective))
    assert abs(r.value - target) < tol


def test_value_is_reevaluated_from_settings():
    r = optimize_settings(ghz_state(3), cfg("q_s", restarts=1))
    assert r.value == evaluate_objective("q_s", ghz_state(3), r.settings)
    assert r.value == witness.evaluate(ghz_state(3), r.settings).q_s


def test_pinned_svetlichny_angles():
    s = MeasurementSettings.from_angles(PINNED_SVETLICHNY_ANGLES)
    assert abs(abs(witness.evaluate(ghz_state(3), s).splus) - 4 * R2) < 1e-9
    a = np.array(PINNED_SVETLICHNY_ANGLES)
    np.testing.assert_allclose(a[:, [0, 2]], PI / 2, atol=1e-7)
    np.testing.assert_allclose((a[:, 1] - a[:, 3]) % (2 * PI), PI / 2, atol=1e-7)


def test_reproducible_to_the_bit():
    a = optimize_settings(ghz_state(3), cfg("abs_f", seed=11))
    b = optimize_settings(ghz_state(3), cfg("abs_f", seed=11))
    assert np.array_equal(a.settings.vectors, b.settings.vectors) and a.value == b.value
    assert a.trace_csv() == b.trace_csv()


def test_monotone_in_restarts():
    st = random_state(3, "pure-haar", 4)
    values = [optimize_settings(st, cfg("abs_s_minus", restarts=k, seed=2)).value for k in (1, 2, 4)]
    assert values[0] <= values[1] <= values[2]
    r = optimize_settings(st, cfg("abs_s_minus", restarts=4, seed=2))
    best = r.best_by_restart()
    assert all(x <= y for x, y in zip(best, best[1:]))


def test_trace_csv_schema():
    r = optimize_settings(singlet(), cfg("chsh", restarts=3))
    lines = r.trace_csv().splitlines()
    assert lines[0] == "restart,iterations,value,settings_angles,schema_version"
    assert len(lines) == 4
    assert len(lines[1].split(",")[3].split()) == 8


def test_ghz4_q_s_below_cap():
    r = optimize_settings(ghz_state(4), cfg("q_s", restarts=2))
    assert r.value <= 2 ** 7 + 1e-6


def test_cap_guard():
    for objective in OBJECTIVES:
        n = 2 if objective.startswith("chsh") else 3
        assert math.isfinite(objective_cap(objective, n))
    with pytest.raises(BoundExceeded):
        _check_cap("q_s", 3, 32.1)
    _check_cap("q_s", 3, 32 + 1e-7)


def test_biseparable_q_f_tight():
    r = optimize_over_biseparable(3, cfg("q_f", restarts=1, state_class="biseparable-pure"))
    assert 8 - 1e-3 <= r.value <= 8 + 1e-9
    assert r.value == evaluate_objective("q_f", r.state, r.settings)


def test_biseparable_s_plus_reaches_4():
    r = optimize_over_biseparable(3, cfg("abs_s_plus", restarts=1, state_class="biseparable-pure"))
    assert 4 - 1e-3 <= r.value <= 4 + 1e-9


def test_biseparable_needs_three_particles():
    with pytest.raises(ValueError):
        optimize_over_biseparable(2, cfg("q_f"))


def test_canonical_angles_range():
    a = canonical_angles(np.array([[-0.3, -1.0, 4.0, 7.0]]))
    assert np.all((a[..., [0, 2]] >= 0) & (a[..., [0, 2]] <= PI))
    assert np.all((a[..., [1, 3]] >= 0) & (a[..., [1, 3]] < 2 * PI))
    np.testing.assert_allclose(settings_from_angles(a).vectors,
                               MeasurementSettings.from_angles([[-0.3, -1.0, 4.0, 7.0]]).vectors, atol=1e-12)


def test_planar_quadratic_value_cases():
    assert abs(planar_quadratic_value(PlanarAngles(PI / 2, PI / 2, PI / 2, PI / 2))) < 1e-30
    assert planar_quadratic_value(PlanarAngles(PI, 0.0, PI, 0.0)) == 4
    with pytest.raises(ValueError):
        planar_quadratic_value(PlanarAngles(1.0, 1.0, 1.0, 1.0))


def test_planar_angles_from_vectors():
    (a, ap), (b, bp) = chsh_planar().vectors
    ang = PlanarAngles.from_vectors(a, b, ap, bp)
    assert abs(ang.total - 2 * PI) < 1e-12
    # the planar value is the singlet's x^2 + y^2
    assert abs(planar_quadratic_value(ang) - witness.chsh_quadratic(singlet(), chsh_planar())[2]) < 1e-12
    with pytest.raises(ValueError):
        PlanarAngles.from_vectors(a, b, ap, [0, 0, 1])


def test_coplanarity_of_singlet_optimum():
    r = optimize_settings(singlet(), cfg("chsh_quadratic", planar=False))
    rep = coplanarity_check(r.settings, singlet())
    assert rep.passed and rep.max_out_of_plane <= 1e-4 and abs(rep.value - 4) < 1e-9


def test_perturbed_settings_fall_below_optimum():
    v = chsh_planar().vectors.copy()
    v[0, 0] = [math.cos(0.3), 0.0, math.sin(0.3)]
    rep = coplanarity_check(MeasurementSettings(v), singlet())
    assert not rep.passed and rep.value < 4 - 1e-3
    assert coplanarity_check(chsh_planar(), singlet()).passed


def test_schmidt_extremality_at_endpoint():
    ps = np.linspace(1 / R2, 1.0, 5)
    rows = schmidt_extremality_sweep(ps, cfg("chsh_quadratic"))
    values = [v for _, v in rows]
    assert max(values[0], values[-1]) >= max(values) - 1e-6
    assert all(v <= 4 + 1e-9 for v in values)


def test_coplanarity_uses_schmidt_frame():
    from quadbell.tensor import QuantumState

    rng = np.random.default_rng(4)
    U = [np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0] for _ in range(2)]
    st = QuantumState.pure(np.kron(U[0], U[1]) @ singlet().data, normalize=True)
    r = optimize_settings(st, cfg("chsh_quadratic", planar=False))
    rep = coplanarity_check(r.settings, st)
    assert rep.passed and abs(rep.value - 4) < 1e-9

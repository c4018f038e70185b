import json
import math

import numpy as np
import pytest

from quadbell import witness
from quadbell.fixtures import all_z, chsh_planar, mermin_xy, svetlichny_opt
from quadbell.operators import MeasurementSettings
from quadbell.tensor import (
    StateError,
    basis_state,
    compose_state,
    ghz_state,
    maximally_mixed,
    mixture,
    random_state,
    rng_for,
    singlet,
)

R2 = math.sqrt(2)


def test_bounds_at_three_particles():
    assert witness.quadratic_s_bounds(3) == (16, 32)
    assert witness.quadratic_f_bounds(3) == (8, 16)
    assert witness.linear_s_bounds(3) == pytest.approx((4, 4 * R2))
    assert witness.linear_f_bounds(3) == pytest.approx((2 * R2, 4))


@pytest.mark.parametrize("n", range(3, 9))
def test_bound_families_are_consistent(n):
    bs, gs = witness.quadratic_s_bounds(n)
    bf, gf = witness.quadratic_f_bounds(n)
    assert (bs, gs) == (2.0 ** (2 * n - 2), 2.0 ** (2 * n - 1))
    # the S and F forms are the same inequality through the identity
    assert bs == 2.0 ** (n - 2) * bf and gs == 2.0 ** (n - 2) * gf
    assert witness.linear_f_bounds(n)[1] ** 2 == pytest.approx(gf)


def test_ghz3_mermin_settings_certified():
    r = witness.evaluate(ghz_state(3), mermin_xy(3))
    assert abs(abs(r.f) - 4) < 1e-12 and abs(r.fprime) < 1e-12
    assert abs(r.q_f - 16) < 1e-12 and abs(r.q_s - 32) < 1e-12
    assert r.verdict == witness.CERTIFIED and abs(r.margin - 16) < 1e-12


def test_biseparable_singlet_times_up_inconclusive():
    st = compose_state([singlet(), basis_state([0])], [[0, 1], [2]])
    for i in range(20):
        r = witness.evaluate(st, MeasurementSettings.random(3, rng_for(2, i)))
        assert r.q_f <= 8 + 1e-9 and r.verdict == witness.INCONCLUSIVE


def test_product_state_saturates_biseparable_bound():
    r = witness.evaluate(basis_state([0, 0, 0]), all_z(3))
    assert r.f == 2 and r.fprime == 2 and r.q_f == 8
    assert r.verdict == witness.INCONCLUSIVE


def test_maximally_mixed_gives_zero():
    r = witness.evaluate(maximally_mixed(3), MeasurementSettings.random(3, 7))
    assert max(abs(r.f), abs(r.fprime), abs(r.splus), abs(r.sminus)) < 1e-15
    lin = witness.check_linear(maximally_mixed(3), MeasurementSettings.random(3, 7))
    assert lin.max_abs_f < 1e-15 and lin.abs_splus < 1e-15 and lin.independent_tests == "neither"


def test_evaluate_errors():
    with pytest.raises(StateError):
        witness.evaluate(singlet(), MeasurementSettings.random(2, 0))
    with pytest.raises(StateError):
        witness.evaluate(ghz_state(3), MeasurementSettings.random(4, 0))


def test_consistency_error_on_identity_mismatch():
    with pytest.raises(witness.ConsistencyError):
        witness.report_from_values(3, 4.0, 0.0, 1.0, 1.0)


def test_report_json_fields():
    st, s = ghz_state(3), mermin_xy(3)
    doc = json.loads(witness.evaluate(st, s).to_json(s, st))
    assert doc["schema_version"] == witness.SCHEMA_VERSION
    for key in ("n", "f", "fprime", "splus", "sminus", "q_f", "q_s", "bound_biseparable_s",
                "bound_global_s", "bound_biseparable_f", "bound_global_f", "linear_s_bounds",
                "linear_f_bounds", "verdict", "margin", "settings", "state_digest"):
        assert key in doc
    assert doc["state_digest"] == st.digest()


def test_chsh_quadratic_cases():
    x, y, q = witness.chsh_quadratic(basis_state([0, 0]), all_z(2))
    assert (x, y, q) == (2, 0, 4)
    x, y, q = witness.chsh_quadratic(maximally_mixed(2), MeasurementSettings.random(2, 3))
    assert abs(q) < 1e-30
    x, y, q = witness.chsh_quadratic(singlet(), chsh_planar())
    assert abs(x - R2) < 1e-12 and abs(y - R2) < 1e-12 and abs(q - 4) < 1e-12
    assert abs(x + y - 2 * R2) < 1e-12
    with pytest.raises(StateError):
        witness.chsh_quadratic(ghz_state(3), all_z(3))


def test_linear_svetlichny_optimum():
    lin = witness.check_linear(ghz_state(3), svetlichny_opt())
    assert abs(lin.abs_splus - 4 * R2) < 1e-12
    assert lin.violates_s and not lin.exceeds_s_global


def test_linear_mermin_settings_independence():
    lin = witness.check_linear(ghz_state(3), mermin_xy(3))
    assert abs(lin.max_abs_f - 4) < 1e-12 and lin.violates_f
    assert abs(abs(lin.f_plus_fprime) - 4) < 1e-12 and abs(abs(lin.f_minus_fprime) - 4) < 1e-12
    assert not lin.violates_s
    assert lin.independent_tests == "mermin-klyshko-only"
    assert witness.check_linear(ghz_state(3), svetlichny_opt()).independent_tests == "svetlichny-only"


def test_evaluate_batch_matches_single():
    st = [random_state(3, "pure-haar", rng_for(4, i)) for i in range(5)]
    s = [MeasurementSettings.random(3, rng_for(5, i)) for i in range(5)]
    out = witness.evaluate_batch(np.stack([x.vectors for x in s]), np.stack([x.data for x in st]), "pure")
    for i in range(5):
        r = witness.evaluate(st[i], s[i])
        assert abs(out["q_s"][i] - r.q_s) < 1e-12 and abs(out["splus"][i] - r.splus) < 1e-12


def test_convexity_of_quadratic():
    for i in range(30):
        rng = rng_for(6, i)
        a = random_state(3, "pure-haar", rng)
        b = random_state(3, "mixed-ginibre", rng)
        s = MeasurementSettings.random(3, rng)
        w = rng.uniform()
        qa, qb = witness.evaluate(a, s).q_s, witness.evaluate(b, s).q_s
        qm = witness.evaluate(mixture([w, 1 - w], [a, b]), s).q_s
        assert qm <= w * qa + (1 - w) * qb + 1e-10


def test_permutation_invariance():
    perm = [2, 0, 1]
    for i in range(10):
        rng = rng_for(9, i)
        st = random_state(3, "pure-haar", rng)
        s = MeasurementSettings.random(3, rng)
        v = np.transpose(st.data.reshape(2, 2, 2), perm).reshape(-1)
        relabelled = type(st).pure(v)
        q1 = witness.evaluate(st, s).q_s
        q2 = witness.evaluate(relabelled, s.permuted(perm)).q_s
        assert abs(q1 - q2) < 1e-10


def test_no_two_particle_discrimination():
    # a product state already reaches the largest quantum value of x^2 + y^2
    assert witness.chsh_quadratic(basis_state([0, 0]), all_z(2))[2] == 4


def test_fig1_geometry_samples():
    for i in range(200):
        rng = rng_for(10, i)
        s = MeasurementSettings.random(3, rng)
        r = witness.evaluate(random_state(3, "pure-haar", rng), s)
        assert math.hypot(r.f, r.fprime) <= 4 + 1e-9
        r = witness.evaluate(random_state(3, "biseparable", rng), s)
        assert math.hypot(r.f, r.fprime) <= 2 * R2 + 1e-9

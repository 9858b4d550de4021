import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhdlab.core import (PARAM_SPECS, AxisSingularityError, ConstraintError, CylComponents, DomainError,
                         MhdConfig, MhdLabError, MhdState, SpacetimePoint, cart_to_cyl, cyl_to_cart,
                         validate_params)


def test_cyl_to_cart_phi_zero():
    pos, vec = cyl_to_cart(CylComponents(1.0, 0.0, 0.0, 1.0, 0.0, 0.0))
    np.testing.assert_allclose(pos, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(vec, [1, 0, 0], atol=1e-15)


def test_cyl_to_cart_quarter_turn():
    pos, vec = cyl_to_cart(CylComponents(1.0, math.pi / 2, 0.0, 1.0, 0.0, 0.0))
    np.testing.assert_allclose(pos, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(vec, [0, 1, 0], atol=1e-15)


def test_axis_is_singular():
    with pytest.raises(AxisSingularityError):
        cyl_to_cart(CylComponents(0.0, 0.3, 1.0))
    with pytest.raises(AxisSingularityError):
        cart_to_cyl((0.0, 0.0, 2.0))


def test_branch_cut_maps_to_plus_pi():
    q = cart_to_cyl((-1.0, -0.0, 0.0))
    assert q.phi == math.pi


@settings(max_examples=300, deadline=None)
@given(r=st.floats(1e-6, 1e6), phi=st.floats(-math.pi, math.pi, exclude_min=True),
       z=st.floats(-1e3, 1e3), a=st.tuples(*[st.floats(-10, 10)] * 3))
def test_round_trip(r, phi, z, a):
    q = CylComponents(r, phi, z, *a)
    back = cart_to_cyl(*cyl_to_cart(q))
    assert abs(back.r - r) < 1e-12 * max(1.0, r)
    dphi = math.remainder(back.phi - phi, 2 * math.pi)
    assert abs(dphi) < 1e-12
    assert abs(back.z - z) < 1e-12 * max(1.0, abs(z))
    np.testing.assert_allclose([back.a_r, back.a_phi, back.a_z], a, atol=1e-12 * max(1.0, max(map(abs, a))))


def test_spacetime_point_rejects_nan():
    with pytest.raises(DomainError):
        SpacetimePoint(0.0, float("nan"), 0.0, 0.0)
    assert SpacetimePoint(1.0, 2.0, 3.0, 4.0).as_tuple() == (1.0, 2.0, 3.0, 4.0)


def test_state_array_round_trip():
    s = MhdState(1.0, 2.0, (3.0, 4.0, 5.0), (6.0, 7.0, 8.0))
    arr = s.as_array()
    assert arr.tolist() == [1, 2, 3, 4, 5, 6, 7, 8]
    back = MhdState.from_array(arr)
    assert back.rho == 1.0 and tuple(back.B) == (6.0, 7.0, 8.0)


def test_config_gamma_bound():
    with pytest.raises(ConstraintError):
        MhdConfig(gamma=0.9)
    assert MhdConfig().gamma == pytest.approx(5 / 3)


def test_g1_sign_mismatch_named():
    with pytest.raises(ConstraintError) as exc:
        validate_params("G1/gamma=2", {"alpha": 1.0, "W_o": -1.0})
    assert "sgn[W_o] = sgn[alpha]" in exc.value.failures


def test_g9_alpha_window_accepts():
    prm = validate_params("G9", {"alpha": -0.6, "beta": 1.0})
    assert prm["alpha"] == -0.6 and prm["gamma"] == 3.0


def test_g9_alpha_window_rejects():
    with pytest.raises(ConstraintError):
        validate_params("G9", {"alpha": -0.8})


def test_g3_case4_example_values_accepted():
    # alpha2 = 1.6 > 2 alpha1 makes sqrt(R_o/(2 alpha1 - alpha2)) imaginary
    validate_params("G3/case4", {"alpha1": 0.75, "alpha2": 1.6})


def test_g3_case4_interval():
    assert validate_params("G3/case4", {"alpha1": 0.75, "alpha2": 1.4})["alpha2"] == 1.4
    with pytest.raises(ConstraintError) as exc:
        validate_params("G3/case4", {"alpha1": 0.75, "alpha2": 1.6})
    assert any("alpha2" in f for f in exc.value.failures)


def test_all_failures_reported():
    with pytest.raises(ConstraintError) as exc:
        validate_params("G1/gamma=2", {"R_o": -1.0, "alpha": 1.0, "W_o": -2.0})
    assert {"R_o > 0", "sgn[W_o] = sgn[alpha]"} <= set(exc.value.failures)


def test_unknown_and_fixed_parameters():
    with pytest.raises(ConstraintError) as exc:
        validate_params("G7", {"bogus": 1.0})
    assert "unknown parameter 'bogus'" in exc.value.failures
    with pytest.raises(ConstraintError):
        validate_params("G1/gamma=2", {"gamma": 1.5})
    with pytest.raises(MhdLabError):
        validate_params("G42", {})


def test_config_gamma_fills_free_gamma():
    prm = validate_params("G1/generic", None, MhdConfig(gamma=1.4))
    assert prm["gamma"] == 1.4


@pytest.mark.parametrize("fid", sorted(PARAM_SPECS))
def test_defaults_validate(fid):
    prm = validate_params(fid)
    assert all(math.isfinite(v) for v in prm.values())


@settings(max_examples=200, deadline=None)
@given(fid=st.sampled_from(sorted(PARAM_SPECS)), data=st.data())
def test_validate_is_total(fid, data):
    keys = sorted(PARAM_SPECS[fid].defaults)
    raw = {k: data.draw(st.floats(-5, 5, allow_nan=False)) for k in keys if data.draw(st.booleans())}
    try:
        validate_params(fid, raw)
    except ConstraintError as exc:
        assert exc.failures

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhdlab import cli, diffcalc as dc, mhdcheck as mc, reduced as rd
from mhdlab import solutions as so
from mhdlab.core import DomainError, MhdState

ALL = cli.ALL_IDS


def _solving(fid):
    return "corrected" if "corrected" in rd.family_variants(fid) else None


def _family(fid, params=None):
    return rd.build_family(fid, params, variant=_solving(fid))


def _pts(fam, n=100, seed=3):
    return fam.sample(n, rng=seed)


def test_uniform_state_has_zero_residual():
    fam = so.uniform_family()
    rep = mc.residual(fam, _pts(fam))
    assert rep.max_abs == 0.0 and rep.rel == 0.0
    assert set(rep.by_equation()) == {"continuity", "momentum", "pressure", "induction", "divB"}
    assert json.loads(rep.to_json())["max_abs"] == 0.0


def test_g7_residual_small():
    fam = so.make_family("G7")
    assert mc.residual(fam, _pts(fam)).max_abs < 1e-9


def test_g4_singular_ray_is_domain_error():
    fam = so.make_family("G4", {"c_o": 4.0})
    # y = x tan(pi/4)
    with pytest.raises(DomainError):
        mc.residual(fam, (1.0, 1.0, 1.0, 0.0))


def test_report_fields_finite_and_shaped():
    fam = so.make_family("G9", variant="corrected")
    t, x, y, z = _pts(fam, 20)
    rep = mc.residual(fam, (t, x, y, z))
    assert rep.continuity.shape == (20,) and len(rep.momentum) == 3
    assert all(np.all(np.isfinite(v)) for v in rep.to_dict().values() if not isinstance(v, list))


def test_g8_current_vanishes():
    fam = so.make_family("G8")
    assert np.max(np.abs(mc.current_density(fam, _pts(fam)))) == 0.0


def test_g1_current_matches_display():
    fam = so.make_family("G1/gamma=2")
    t, x, y, z = _pts(fam)
    a = fam.params["alpha"]
    B = fam.evaluate(t, x, y, z).B
    want = np.stack([-(a * B[1] + B[0]) / t, (a * B[0] - B[1]) / t, 0 * t], axis=-1)
    np.testing.assert_allclose(mc.current_density(fam, (t, x, y, z)), want, rtol=0, atol=1e-10)


def _g9_xi(prm, t, x, z):
    return prm["C_2"] - prm["beta"] / 2 * np.log(t) - (x - prm["beta"] * z) / (2 * t)


def test_g9_current_matches_display():
    fam = so.make_family("G9")
    prm = fam.params
    t, x, y, z = _pts(fam)
    a, b = prm["alpha"], prm["beta"]
    amp = -(2 * a + 1) * prm["Z_o"] * t ** (a - 1) * _g9_xi(prm, t, x, z) ** (2 * a)
    want = amp[:, None] * np.array([1.0, -(1 + b * b), 1.0])
    np.testing.assert_allclose(mc.current_density(fam, (t, x, y, z)), want, rtol=0, atol=1e-10)


def test_g7_force_is_pure_tension():
    fam = so.make_family("G7")
    pts = _pts(fam)
    fd = mc.force_decomposition(fam, pts)
    B = fam.evaluate(*pts).B
    Zo = fam.params["Z_o"]
    want = np.stack([-Zo * B[1], Zo * B[0], 0 * B[2]], axis=-1)
    np.testing.assert_allclose(fd.lorentz, want, rtol=0, atol=1e-12)
    assert np.max(np.abs(fd.pressure_part)) < 1e-12
    assert np.max(np.abs(fd.tension_part)) > 1e-2


def test_g1_force_has_no_tension():
    fam = so.make_family("G1/gamma=2")
    t, x, y, z = pts = _pts(fam)
    fd = mc.force_decomposition(fam, pts)
    assert np.max(np.abs(fd.tension_part)) < 1e-12
    rho = fam.evaluate(*pts).rho
    want = np.stack([0 * t, 0 * t, -fam.params["alpha"] * fam.params["X_o"] ** 2 * rho / t**2], axis=-1)
    np.testing.assert_allclose(fd.lorentz, want, rtol=1e-12, atol=1e-14)


def test_g10_case2_force_has_both_parts():
    fam = so.make_family("G10/case2")
    prm = fam.params
    t, x, y, z = pts = _pts(fam)
    fd = mc.force_decomposition(fam, pts)
    assert np.min(np.max(np.abs(fd.pressure_part), axis=-1)) > 1e-6
    assert np.min(np.max(np.abs(fd.tension_part), axis=-1)) > 1e-6
    q = 2 * z / 3 + prm["C_2"] - prm["a_o2"]
    Xo, Yo, Zo = prm["X_o"], prm["Y_o"], prm["Z_o"]
    want = np.stack([Zo / (3 * t**4) * Xo / np.sqrt(q), Zo / (3 * t**4) * Yo / np.sqrt(q),
                     -(Xo**2 + Yo**2) / (3 * t**4)], axis=-1)
    np.testing.assert_allclose(fd.lorentz, want, rtol=1e-12, atol=1e-14)


def test_frozen_in_uniform():
    fam = so.uniform_family(v=(0.3, -0.1, 0.2))
    assert np.max(np.abs(mc.frozen_in_residual(fam, _pts(fam)))) == 0.0


def test_frozen_in_g1():
    fam = so.make_family("G1/gamma=2")
    pts = _pts(fam)
    assert np.max(np.abs(mc.frozen_in_residual(fam, pts))) < 1e-9
    assert np.max(np.abs(mc.b_grad_v(fam, pts))) == 0.0


def test_frozen_in_g9():
    fam = so.make_family("G9", variant="corrected")
    assert np.max(np.abs(mc.frozen_in_residual(fam, _pts(fam)))) < 1e-9


def test_g4_vorticity_sides_vanish():
    fam = so.make_family("G4")
    vt = mc.vorticity_terms(fam, _pts(fam))
    assert np.max(np.abs(vt.dw_dt)) == 0.0
    assert np.max(np.abs(vt.advection + vt.magnetic)) < 1e-9


def test_g7_vorticity_balance():
    fam = so.make_family("G7")
    vt = mc.vorticity_terms(fam, _pts(fam))
    assert np.max(np.abs(vt.residual)) < 1e-8
    assert np.max(np.abs(vt.magnetic)) > 1e-3


def _rotation(t, x, y, z):
    zero = 0.0 * (t + x + y + z)
    return MhdState(1.0 + zero, 1.0 + (x * x + y * y) / 2, (-y + zero, x + zero, zero), (zero, zero, zero))


def test_rigid_rotation_vorticity():
    fam = so.custom_family(_rotation)
    pts = _pts(fam)
    assert np.max(np.abs(mc.vorticity_transport_residual(fam, pts))) == 0.0
    assert mc.residual(fam, pts).max_abs < 1e-14


def test_energy_law_examples():
    for fam in (so.make_family("G7"), so.uniform_family()):
        assert np.max(np.abs(mc.energy_law_residual(fam, _pts(fam)))) < 1e-8
    for fid in ("G1/gamma=2", "G1/generic"):
        fam = so.make_family(fid)
        assert np.max(np.abs(mc.energy_law_residual(fam, _pts(fam)))) < 1e-7


def test_energy_sign_choice():
    assert mc.CANONICAL_ENERGY_SIGN == "standard"
    # B.v is constant on G7, so the flux sign is invisible there
    g7 = so.make_family("G7")
    both = mc.energy_law_residuals(g7, _pts(g7))
    assert max(np.max(np.abs(r)) for r in both.values()) < 1e-8
    for fid in ("G8", "G10/case1", "G10/case2"):
        fam = so.make_family(fid)
        both = mc.energy_law_residuals(fam, _pts(fam))
        assert np.max(np.abs(both["standard"])) < 1e-8 < np.max(np.abs(both["printed"]))


def test_energy_law_needs_gamma_above_one():
    fam = so.make_family("G1/gamma=1")
    with pytest.raises(ValueError):
        mc.energy_law_residual(fam, _pts(fam, 5))


def test_force_free_detection():
    for fid in ("G8", "G10/case1"):
        fam = so.make_family(fid)
        assert mc.is_force_free(fam, _pts(fam))
    fam = so.make_family("G7")
    assert not mc.is_force_free(fam, _pts(fam))


@pytest.mark.parametrize("fid", ALL)
def test_lorentz_identity(fid):
    fam = _family(fid)
    fd = mc.force_decomposition(fam, _pts(fam, 50))
    scale = max(1.0, np.max(np.abs(fd.pressure_part)), np.max(np.abs(fd.tension_part)))
    assert np.max(np.abs(fd.lorentz - fd.pressure_part - fd.tension_part)) <= 1e-11 * scale


@pytest.mark.parametrize("fid", ALL)
def test_divergence_free(fid):
    fam = _family(fid)
    rep = mc.residual(fam, _pts(fam, 200))
    assert np.max(np.abs(rep.divB)) <= 1e-11 * max(1.0, float(np.max(rep.scales["divB"])))


def test_g4_static_equilibrium():
    fam = so.make_family("G4")
    pts = _pts(fam)
    fj = mc.field_jet(fam, pts)
    gp = np.stack(dc.grad(fj.p), axis=-1)
    assert np.max(np.abs(gp - mc.force_decomposition(fam, pts).lorentz)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(k=st.tuples(*[st.floats(-2, 2)] * 3), seed=st.integers(0, 2**31))
def test_residual_invariant_under_uniform_boost(k, seed):
    # a constant state stays an equilibrium in any uniformly moving frame
    fam = so.uniform_family(rho=2.0, p=0.5, v=k, B=(0.1, -0.4, 0.3))
    rep = mc.residual(fam, _pts(fam, 20, seed))
    assert rep.max_abs == 0.0
    assert math.isfinite(rep.rel)

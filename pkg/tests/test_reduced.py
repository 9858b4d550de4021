import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhdlab import diffcalc as dc, mhdcheck as mc, reduced as rd
from mhdlab.core import ConstraintError

SOLVERS = {
    "G5": rd.solve_g5,
    "G6": rd.solve_g6,
    "G3/general": lambda **kw: rd.solve_g3_general(s_span=(-0.5, 0.05), **kw),
    "G10/general": rd.solve_g10_general,
}


def test_g5_without_alpha2_is_explicit():
    prof = rd.solve_g5({"alpha2": 0.0, "Y0": 0.3})
    r = prof.grid
    np.testing.assert_array_equal(prof.states[:, 0], 0.3)
    assert np.all(np.abs(prof.states[:, 1] - math.tan(0.3) * np.log(r)) <= prof.error_at(r)[:, 1])


def test_g5_rises_from_flat_start():
    # beta_o = (2 A_o + Z_o^2)/X_o^2 = 1, so Y'(1) = alpha2 (beta_o + 1) = 2
    prm = {"alpha2": 1.0, "A_o": 0.5, "Z_o": 0.5, "X_o": math.sqrt(1.25), "Y0": 0.0, "r0": 1.0}
    assert rd.beta_o(rd.solve_g5(prm).params) == pytest.approx(1.0, rel=1e-15)
    prof = rd.solve_g5(prm, r_span=(0.9, 1.1))
    assert prof.slopes[np.argmin(np.abs(prof.grid - 1.0)), 0] == pytest.approx(2.0, rel=1e-14)
    assert np.all(np.diff(prof.states[:, 0]) > 0)


@pytest.mark.parametrize("fid", sorted(SOLVERS))
def test_tolerance_refinement(fid):
    coarse = SOLVERS[fid](tol=1e-10)
    fine = SOLVERS[fid](tol=1e-12)
    s = np.linspace(*coarse.span, 200)
    assert np.max(np.abs(coarse(s) - fine(s))) < 1e-8


@pytest.mark.parametrize("fid", sorted(SOLVERS))
def test_halved_tolerance_within_estimate(fid):
    coarse = SOLVERS[fid](tol=1e-10)
    fine = SOLVERS[fid](tol=5e-11)
    s = fine.grid[1:-1]
    assert np.all(np.abs(coarse(s) - fine(s)) < 10 * coarse.error_at(s))


@pytest.mark.parametrize("fid", sorted(SOLVERS))
def test_doubled_resolution_within_estimate(fid):
    base = SOLVERS[fid](tol=1e-10)
    dense = SOLVERS[fid](tol=1e-10, max_step=float(np.min(np.diff(base.grid))) / 2)
    s = np.linspace(*base.span, 300)
    # the change between two approximations is bounded by their combined error
    assert np.all(np.abs(base(s) - dense(s)) <= base.error_at(s) + dense.error_at(s))


def test_grid_strictly_increasing():
    for solver in SOLVERS.values():
        assert np.all(np.diff(solver().grid) > 0)


def test_g6_zero_alpha2_matches_closed_form():
    prof = rd.solve_g6({"alpha2": 0.0}, tol=1e-12)
    s = prof.grid
    assert np.max(np.abs(prof(s)[:, 0] - rd.g6_zero_closed_Y(prof.params, s))) < 1e-8


def test_g6_integrals_start_at_zero():
    prof = rd.solve_g6()
    np.testing.assert_array_equal(prof(prof.s0)[1:], [0.0, 0.0])


def test_singular_initial_values_rejected():
    with pytest.raises(ConstraintError):
        rd.solve_g5({"Y0": math.pi / 2})
    with pytest.raises(ConstraintError):
        rd.solve_g6({"alpha1": 0.5, "Y0": math.atan(2.0)})
    with pytest.raises(ConstraintError):
        rd.solve_g3_general(W0=-1.0)
    with pytest.raises(ConstraintError):
        rd.solve_g5(r_span=(0.0, 1.0))


def test_g5_singular_event_flagged():
    prof = rd.solve_g5({"alpha2": 3.0, "Y0": 1.2}, r_span=(1.0, 5.0))
    assert prof.events and "pi/2" in prof.events[0].name
    assert prof.span[1] < 5.0
    assert abs(math.cos(prof.states[-1, 0])) < 1e-3


def test_g10_resonant_start_rejected():
    prm = {"R_o": 1.0, "Z_o": 0.6}
    with pytest.raises(ConstraintError):
        rd.solve_g10_general(prm, W0=0.36)


def test_query_outside_span():
    prof = rd.solve_g5()
    with pytest.raises(rd.SpanError):
        prof(10.0)


def test_profile_csv_header():
    prof = rd.solve_g6()
    head = prof.to_csv().splitlines()[0]
    assert head == "s,Y,theta1,theta2,err_Y,err_theta1,err_theta2"


@pytest.mark.parametrize("case", ["case1", "case2", "case3", "case4", "case5"])
def test_g3_case_lines_solve_reduced_equation(case):
    assert np.max(np.abs(rd.g3_ansatz_residual(case, np.linspace(-0.5, 0.5, 100)))) < 1e-10


@pytest.mark.parametrize("case", ["case1", "case2"])
def test_g10_case_lines_solve_reduced_equation(case):
    assert np.max(np.abs(rd.g10_ansatz_residual(case, np.linspace(0.0, 1.0, 100)))) < 1e-10


def test_g9_branch_solves_overdetermined_system():
    r = rd.g9_ansatz_residuals(np.linspace(-1.0, 1.0, 100))
    assert np.max(np.abs(r.relation_f)) < 1e-10
    assert np.max(np.abs(r.pressure_balance)) < 1e-10
    assert np.max(np.abs(r.relation_uw)) < 1e-10


def test_g9_material_relation():
    r = rd.g9_ansatz_residuals(np.linspace(-1.0, 1.0, 100))
    assert np.max(np.abs(r.relation_uw_material)) < 1e-10


def test_g3_solver_follows_case1_line():
    rp = rd.g3_case_reduced_params("case1")
    prm = {k: rp[k] for k in ("alpha1", "alpha2", "A_o", "R_o", "X_o", "gamma")}
    prof = rd.solve_g3_general(prm, s_span=(-0.5, 0.5), W0=rp["C_2"], tol=1e-12)
    s = np.linspace(-0.5, 0.5, 50)
    np.testing.assert_allclose(prof(s)[:, 0], rp["C_1"] * s + rp["C_2"], rtol=1e-9)


@settings(max_examples=25, deadline=None)
@given(a2=st.floats(-0.5, 0.5), y0=st.floats(-1.0, 1.0))
def test_g5_profile_satisfies_its_equation(a2, y0):
    prof = rd.solve_g5({"alpha2": a2, "Y0": y0}, r_span=(0.8, 1.25))
    r = np.linspace(*prof.span, 40)
    Y = prof(r)[:, 0]
    b = rd.beta_o(prof.params)
    # r Y' from the interpolant's own slope
    h = 1e-5
    rlo, rhi = prof.span
    rr = np.clip(r, rlo + h, rhi - h)
    dY = (prof(rr + h)[:, 0] - prof(rr - h)[:, 0]) / (2 * h)
    Y = prof(rr)[:, 0]
    assert np.max(np.abs(rr * dY - (a2 * b * rr**2 * np.cos(Y) ** 2 + a2))) < 1e-6


def _g5_family(variant="reference", **prm):
    return rd.assemble_field(rd.solve_g5(prm or None, r_span=(0.5, 2.0)), "G5", variant=variant)


def test_g5_field_lines_on_isobars():
    fam = _g5_family()
    pts = fam.sample(100, rng=2)
    fj = mc.field_jet(fam, pts)
    assert np.max(np.abs(dc.directional(fj.B, fj.p))) < 1e-8


@pytest.mark.parametrize("variant", ["reference", "corrected"])
def test_g5_constant_density_option(variant):
    fam = _g5_family(variant, const_density=1.0)
    pts = fam.sample(100, rng=2)
    fj = mc.field_jet(fam, pts)
    assert np.max(np.abs(dc.directional(fj.B, fj.rho))) < 1e-8


@pytest.mark.parametrize("fid", ["G5", "G6"])
def test_axial_flow_only(fid):
    fam = rd.build_family(fid)
    v = fam.evaluate(*fam.sample(100, rng=6)).v
    assert np.all(v[0] == 0.0) and np.all(v[1] == 0.0)


def test_g5_radial_and_azimuthal_balance():
    fam = rd.build_family("G5")
    pts = fam.sample(100, rng=4)
    fj = mc.field_jet(fam, pts)
    Bv = [dc.value(c) for c in fj.B]
    gp = dc.grad(fj.p)
    d = [gp[i] + sum(Bv[j] * fj.B[j].d(1 + i) for j in range(3)) - dc.directional(fj.B, fj.B[i])
         for i in range(3)]
    phi = np.arctan2(pts[2], pts[1])
    radial = d[0] * np.cos(phi) + d[1] * np.sin(phi)
    azimuthal = -d[0] * np.sin(phi) + d[1] * np.cos(phi)
    assert max(np.max(np.abs(radial)), np.max(np.abs(azimuthal))) < 1e-7


def test_assembled_family_rejects_queries_outside_profile():
    fam = rd.build_family("G5")
    lo, hi = fam.extras["profile"].span
    assert not fam.domain(0.5, 1.1 * hi, 0.0, 0.0)
    assert fam.domain(0.5, (lo + hi) / 2, 0.0, 0.0)


def test_assembly_kind_mismatch():
    with pytest.raises(Exception):
        rd.assemble_field(rd.solve_g5(), "G6")

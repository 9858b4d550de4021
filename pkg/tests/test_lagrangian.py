import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhdlab import diffcalc as dc, lagrangian as lg
from mhdlab import solutions as so
from mhdlab.core import MhdLabError, MhdState
from mhdlab.solutions import Condition


def _zero(t, x, y, z):
    return 0.0 * (t + x + y + z)


def _rotation(t, x, y, z):
    o = _zero(t, x, y, z)
    return MhdState(1.0 + o, 1.0 + (x * x + y * y) / 2, (-y + o, x + o, o), (o, o, o))


def _gradient_flow(t, x, y, z):
    # v = grad(x^2 y + sin z)
    o = _zero(t, x, y, z)
    return MhdState(1.0 + o, 1.0 + o, (2 * x * y, x * x + o, dc.cos(z) + o), (o, o, o))


def test_uniform_translation():
    fam = so.uniform_family(v=(1.0, 0.0, 0.0))
    np.testing.assert_allclose(lg.advect(fam, (0.0, 0.0, 0.0), 0.0, 2.0), [2, 0, 0], atol=1e-14)


def test_g4_moves_along_axis_only():
    fam = so.make_family("G4")
    p0 = np.array([1.0, 0.5, 0.2])
    p1 = lg.advect(fam, p0, 0.0, 2.0)
    assert p1[:2].tolist() == p0[:2].tolist()
    assert abs(p1[2] - p0[2]) > 1e-3


def test_halved_tolerance_within_estimate():
    fam = so.make_family("G7")
    pts = np.array(fam.sample(8, rng=1)[1:]).T
    a = lg.advect_detail(fam, pts, 1.0, 3.0, tol=1e-9)
    b = lg.advect_detail(fam, pts, 1.0, 3.0, tol=5e-10)
    assert np.all(np.abs(a.points - b.points) < 10 * np.maximum(a.error, 1e-15))


def test_domain_exit_reports_time():
    fam = so.custom_family(lambda t, x, y, z: MhdState(1 + _zero(t, x, y, z), 1.0, (1.0, 0.0, 0.0), (0, 0, 0)),
                           conditions=(Condition("x < 1", lambda t, x, y, z: 1.0 - x),))
    with pytest.raises(lg.DomainExitError) as exc:
        lg.advect(fam, (0.0, 0.0, 0.0), 0.0, 2.0)
    assert exc.value.time == pytest.approx(1.0, abs=1e-3)


def test_rigid_rotation_circulation():
    fam = so.custom_family(_rotation)
    loop = lg.MaterialLoop.circle((0, 0, 0), 1.0, (0, 0, 1), 512, 1.0)
    assert lg.circulation(fam, loop).value == pytest.approx(2 * math.pi, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(c=st.tuples(*[st.floats(-0.5, 0.5)] * 3), r=st.floats(0.05, 0.5),
       nrm=st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_gradient_flow_has_no_circulation(c, r, nrm):
    fam = so.custom_family(_gradient_flow)
    loop = lg.MaterialLoop.circle(c, r, nrm, 64, 1.0)
    assert abs(lg.circulation(fam, loop).value) < 1e-12


def test_g1_circulation_preserved():
    fam = so.make_family("G1/gamma=2")
    _, series = lg.circulation_series(fam, (0.1, 0.2, 0.3), 0.5, (1, 2, 3), 1.0, [1.0, 2.0])
    assert abs(series[1].value - series[0].value) < 1e-6


def _loop(center, t, radius=0.4, n=128):
    return lg.MaterialLoop.circle(center, radius, (1, 2, 3), n, t)


def test_g1_rate_vanishes():
    rc = lg.circulation_rate_check(so.make_family("G1/gamma=2"), _loop((0.1, 0.2, 0.3), 1.0))
    assert abs(rc.dgamma_dt) < 1e-6 and abs(rc.acceleration_integral) < 1e-6


@pytest.mark.parametrize("fid,center", [("G7", (0.2, -0.1, 0.3)), ("G10/case2", (0.2, -0.1, 0.3))])
def test_tension_drives_circulation(fid, center):
    rc = lg.circulation_rate_check(so.make_family(fid), _loop(center, 1.0))
    assert abs(rc.dgamma_dt) > 1e-6
    assert abs(rc.dgamma_dt - rc.acceleration_integral) < 1e-5 * abs(rc.acceleration_integral)


def test_g7_rate_is_tension_alone():
    # uniform pressure and |B|: only the tension part of the Lorentz force survives
    rc = lg.circulation_rate_check(so.make_family("G7"), _loop((0.2, -0.1, 0.3), 1.0))
    assert rc.tension_integral == pytest.approx(rc.acceleration_integral, rel=1e-10)


def test_loop_validation():
    with pytest.raises(MhdLabError):
        lg.MaterialLoop.circle(n=8)
    pts = lg.circle_points((0, 0, 0), 1.0, (0, 0, 1), 32)
    bow = pts.copy()
    bow[:, 1] *= np.sign(np.cos(np.linspace(0, 2 * np.pi, 32, endpoint=False)))
    with pytest.raises(MhdLabError):
        lg.MaterialLoop.create(bow, 0.0)
    with pytest.raises(MhdLabError):
        lg.MaterialLoop.create(np.vstack([pts, pts[:1]]), 0.0)


def test_loop_csv():
    loop = lg.MaterialLoop.circle(n=16, t=0.5)
    rows = loop.to_csv().splitlines()
    assert rows[0] == "t,x,y,z" and len(rows) == 17
    assert rows[1].startswith("0.5,")


def test_vertical_field_line():
    fam = so.uniform_family(B=(0.0, 0.0, 1.0))
    line = lg.trace_field_line(fam, (0.1, 0.2, 0.0), 0.5, (-0.5, 0.5))
    np.testing.assert_array_equal(line.points[:, :2], np.tile([0.1, 0.2], (len(line.s), 1)))
    np.testing.assert_allclose(line.points[:, 2], line.s, atol=1e-14)
    assert line.stop == ()


def test_g7_field_line_is_a_helix():
    fam = so.make_family("G7")
    line = lg.trace_field_line(fam, (0.1, 0.2, 0.0), 1.3, (-1.0, 1.0))
    dz = np.gradient(line.points[:, 2], line.s)
    st_ = fam.evaluate(1.3, 0.1, 0.2, 0.0)
    want = fam.params["Z_o"] / math.sqrt(sum(float(b) ** 2 for b in st_.B))
    # exact along the line: |B| and B3 are uniform at fixed t
    assert np.max(np.abs(np.diff(line.points[:, 2]) / np.diff(line.s) - want)) < 1e-8
    assert np.max(np.abs(dz - want)) < 1e-6


def test_field_line_halved_tolerance():
    fam = so.make_family("G7")
    a = lg.trace_field_line(fam, (0.1, 0.2, 0.0), 1.3, (-1.0, 1.0), tol=1e-9)
    b = lg.trace_field_line(fam, (0.1, 0.2, 0.0), 1.3, (-1.0, 1.0), tol=5e-10)
    assert np.all(np.abs(a.points[-1] - b.points[-1]) < 10 * np.maximum(a.error[-1], 1e-15))


def test_field_line_stops_at_boundary():
    fam = so.custom_family(lambda t, x, y, z: MhdState(1 + _zero(t, x, y, z), 1.0, (0, 0, 0), (0.0, 0.0, 1.0)),
                           conditions=(Condition("z < 0.3", lambda t, x, y, z: 0.3 - z),))
    line = lg.trace_field_line(fam, (0.0, 0.0, 0.0), 1.0, (-1.0, 1.0))
    assert line.stop and line.points[-1, 2] <= 0.3 and line.points[-1, 2] > 0.29


def test_g1_separation_tracks_b_over_rho():
    fam = so.make_family("G1/gamma=2")
    p = np.array([0.1, 0.2, 0.3])
    B = np.array([float(c) for c in fam.evaluate(1.0, *p).B])
    d = 1e-4 * B / np.linalg.norm(B)
    pair = np.stack([p - d / 2, p + d / 2])

    def ratio(t, pts):
        st_ = fam.evaluate(t, *pts.mean(axis=0))
        b = math.sqrt(sum(float(c) ** 2 for c in st_.B))
        return np.linalg.norm(pts[1] - pts[0]) / (b / float(st_.rho))

    r0 = ratio(1.0, pair)
    for t in (1.5, 2.0):
        assert ratio(t, lg.advect(fam, pair, 1.0, t, tol=1e-12)) == pytest.approx(r0, rel=1e-5)


@pytest.mark.parametrize("fid", ["G1/gamma=2", "G4", "G7", "G10/case2"])
def test_verdict_matches_metadata(fid):
    fam = so.make_family(fid)
    assert lg.circulation_verdict(fam).conserved == fam.metadata.circulation_conserved

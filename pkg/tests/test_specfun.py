import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mhdlab.core import DomainError
from mhdlab.specfun import (PoleError, SingularityError, artanh, artanh_detail, hyp2f1, hyp2f1_detail,
                            safe_log, safe_pow)

# frozen oracle values: 2^(1/2) and 2 ln 2 from 30-digit mpmath sums
SQRT2 = 1.4142135623730951
TWO_LN2 = 1.3862943611198906
HALF_LN3 = 0.5493061443340549


def test_zero_argument():
    assert hyp2f1(0.3, -1.7, 2.2, 0.0) == 1.0


def test_b_equals_c_identity():
    assert hyp2f1(0.5, 0.7, 0.7, 0.5) == pytest.approx(SQRT2, rel=1e-14)


def test_log_identity():
    assert hyp2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(TWO_LN2, rel=1e-14)


def test_frozen_oracles_reproduce():
    with mpmath.workdps(30):
        assert float(mpmath.hyp2f1(0.5, 0.7, 0.7, 0.5)) == SQRT2
        assert float(mpmath.hyp2f1(1, 1, 2, 0.5)) == TWO_LN2


def test_pole_and_domain_errors():
    with pytest.raises(PoleError):
        hyp2f1(1.0, 1.0, -2.0, 0.1)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 1.5)


def test_polynomial_case():
    # 2F1(-2, b; c; z) = 1 - 2bz/c + b(b+1)z^2/(c(c+1))
    b, c, z = 0.7, 1.9, -3.0
    assert hyp2f1(-2.0, b, c, z) == pytest.approx(1 - 2 * b * z / c + b * (b + 1) * z * z / (c * (c + 1)), rel=1e-14)


def test_vectorised():
    z = np.array([-2.0, -0.3, 0.0, 0.4, 0.95])
    out = hyp2f1(0.4, 1.3, 2.1, z)
    assert out.shape == z.shape
    assert out[2] == 1.0


def test_methods_reported():
    assert hyp2f1_detail(1, 1, 2, 0.2).method == "series"
    assert hyp2f1_detail(1, 1, 2, -3.0).method.startswith("pfaff")
    assert hyp2f1_detail(0.3, 0.4, 1.2, 0.97).method == "connection"
    assert hyp2f1_detail(0.3, 0.4, 1.2, 0.2).truncation_bound < 1e-15


params = st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3)
c_params = st.floats(0.1, 4.0)


def _mp(a, b, c, z):
    with mpmath.workdps(40):
        return float(mpmath.hyp2f1(a, b, c, z))


@settings(max_examples=300, deadline=None)
@given(a=params, b=params, c=c_params, z=st.floats(-0.9, 0.9))
def test_accuracy_inner_region(a, b, c, z):
    ref = _mp(a, b, c, z)
    assume(abs(ref) > 1e-6)
    assert hyp2f1(a, b, c, z) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(a=params, b=params, c=c_params, z=st.floats(0.9, 0.999))
def test_accuracy_near_one(a, b, c, z):
    ref = _mp(a, b, c, z)
    assume(abs(ref) > 1e-6)
    assert hyp2f1(a, b, c, z) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(a=params, b=params, c=c_params, z=st.floats(-50.0, -0.9))
def test_accuracy_negative_axis(a, b, c, z):
    ref = _mp(a, b, c, z)
    assume(abs(ref) > 1e-6)
    assert hyp2f1(a, b, c, z) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(a=params, b=params, c=st.floats(1.2, 4.0), z=st.floats(-0.9, 0.9).filter(lambda v: abs(v) > 1e-3))
def test_contiguous_relation(a, b, c, z):
    f0, f1, f2 = (hyp2f1(a, b, cc, z) for cc in (c - 1, c, c + 1))
    terms = [c * (c - 1) * (z - 1) * f0, c * (c - 1 - (2 * c - a - b - 1) * z) * f1, (c - a) * (c - b) * z * f2]
    assert abs(sum(terms)) <= 1e-10 * max(1.0, max(abs(t) for t in terms))


def test_artanh_examples():
    assert artanh(0.0) == 0.0
    assert artanh(0.5) == pytest.approx(HALF_LN3, rel=1e-15)
    res = artanh_detail(2.0)
    assert res.value == pytest.approx(HALF_LN3, rel=1e-15) and res.principal_real_part
    assert not artanh_detail(0.5).principal_real_part
    assert math.log(3) / 2 == pytest.approx(HALF_LN3, rel=1e-16)


def test_artanh_singular():
    with pytest.raises(SingularityError):
        artanh(1.0)
    with pytest.raises(SingularityError):
        artanh_detail(-1.0)


@settings(max_examples=300, deadline=None)
@given(x=st.floats(-5.0, 5.0))
def test_artanh_inverts_tanh(x):
    y = math.tanh(x)
    # rounding y to a double is amplified by the condition number |y|/(1 - y^2)
    propagated = 2 * np.finfo(float).eps * abs(y) / (1 - y * y)
    assert abs(artanh(y) - x) <= 1e-13 + propagated


def test_artanh_real_part_derivative():
    # d/dx of 0.5 ln((x+1)/(x-1)) is 1/(1-x^2) on x > 1 as well
    x, h = 1.7, 1e-6
    d = (artanh(x + h) - artanh(x - h)) / (2 * h)
    assert d == pytest.approx(1 / (1 - x * x), rel=1e-8)


def test_guarded_pow_and_log():
    assert safe_pow(4.0, 0.5) == 2.0
    with pytest.raises(DomainError):
        safe_pow(-1.0, 0.5)
    with pytest.raises(DomainError):
        safe_log(np.array([1.0, 0.0]))


def test_pfaff_to_terminating_series_near_one():
    # c = b sends the transformed function to the polynomial 1
    assert hyp2f1(1.0, 1.0, 1.0, -10.0) == pytest.approx(1 / 11, rel=1e-15)
    assert hyp2f1(0.3, -2.0, 1.5, 0.97) == pytest.approx(_mp(0.3, -2.0, 1.5, 0.97), rel=1e-13)

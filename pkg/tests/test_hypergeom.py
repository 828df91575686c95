import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowup_lab.hypergeom import (
    Z_SWITCH,
    HypergeomTriple,
    contiguous_shift,
    gauss_f,
    gauss_f_dz,
    gauss_f_dz2,
    hyp2f1,
)

mp.mp.dps = 30

triples = st.tuples(st.floats(0.2, 4.0), st.floats(-3.0, 3.0), st.floats(0.1, 4.0)).map(
    lambda x: HypergeomTriple(x[0], x[1], x[0] + x[2]))


def test_trivial_values():
    t = HypergeomTriple(1.3, 0.7, 2.9)
    assert gauss_f(t, 0.0) == 1.0
    for z in (0.0, 0.3, 0.8, 0.99):
        assert gauss_f(HypergeomTriple(1.3, 0.0, 2.9), z) == 1.0
        assert gauss_f_dz(HypergeomTriple(1.3, 0.0, 2.9), z) == 0.0


def test_log_identity():
    # F(1,1,2;z) = -ln(1-z)/z
    assert abs(hyp2f1(1, 1, 2, 0.5) - 2 * math.log(2)) < 1e-14
    z = np.array([0.1, 0.6, 0.9, 0.99, 1 - 1e-6])
    ref = -np.log1p(-z) / z
    assert np.max(np.abs(hyp2f1(1, 1, 2, z) / ref - 1)) < 1e-10


def test_derivative_of_log_identity():
    f = lambda z: -math.log1p(-z) / z
    h = 1e-6
    fd = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
    val = gauss_f_dz(HypergeomTriple(1, 1, 2), 0.5)
    assert abs(val - (1 - math.log(2)) / 0.25) < 1e-12
    assert abs(val - fd) < 1e-8
    assert abs(val - float(mp.diff(lambda x: mp.hyp2f1(1, 1, 2, x), 0.5))) < 1e-12


@pytest.mark.parametrize("z", [0.05, 0.3, 0.5, 0.7, 0.9, 0.97, 1 - 1e-4, 1 - 1e-6])
@pytest.mark.parametrize("abc", [(1.0, 1.0, 2.0), (0.5, -1.3, 2.2), (2.0, 2.5, 2.3), (1.5, 3.0, 2.0),
                                 (0.7, -0.4, 1.1), (1.0, 0.5, 1.5)])
def test_against_mpmath(abc, z):
    a, b, c = abc
    ref = float(mp.hyp2f1(a, b, c, z))
    tol = 1e-10 if z <= 0.9 else 1e-8
    assert abs(hyp2f1(a, b, c, z) / ref - 1) < tol


@settings(max_examples=150, deadline=None)
@given(t=triples, z=st.floats(0.0, 0.999))
def test_against_mpmath_property(t, z):
    ref = float(mp.hyp2f1(*t, z))
    tol = 1e-10 if z <= 0.9 else 1e-8
    assert abs(gauss_f(t, z) - ref) <= tol * abs(ref)


@settings(max_examples=100, deadline=None)
@given(t=triples, z=st.floats(Z_SWITCH - 0.1, Z_SWITCH + 0.1))
def test_paths_agree_on_overlap(t, z):
    s = hyp2f1(*t, z, method="series")
    e = hyp2f1(*t, z, method="euler")
    assert abs(s - e) <= 1e-9 * abs(s)


@settings(max_examples=150, deadline=None)
@given(t=triples, z=st.floats(0.0, 0.999))
def test_sign_of_f_minus_one(t, z):
    # Euler integrand (1 - zs)^(-beta) is >= 1 for beta > 0 and in (0, 1] for beta < 0
    f = gauss_f(t, z)
    if t.beta > 0:
        assert f >= 1 - 1e-12
    elif t.beta < 0:
        assert 0 < f <= 1 + 1e-12


def test_ode_residual_grid():
    rng = np.random.default_rng(7)
    zs = np.round(np.arange(0.05, 0.951, 0.05), 12)
    worst = 0.0
    for _ in range(40):
        a = rng.uniform(0.2, 4)
        b = rng.uniform(-3, 3)
        c = a + rng.uniform(0.1, 4)
        t = HypergeomTriple(a, b, c)
        f = gauss_f(t, zs)
        f1 = gauss_f_dz(t, zs)
        f2 = gauss_f_dz2(t, zs)
        res = zs * (1 - zs) * f2 + (c - (a + b + 1) * zs) * f1 - a * b * f
        worst = max(worst, float(np.max(np.abs(res) / np.abs(f))))
    assert worst < 1e-7


@settings(max_examples=60, deadline=None)
@given(t=triples)
def test_dz_matches_fourth_order_fd(t):
    h = 1e-3
    z = 0.3
    fd = (-gauss_f(t, z + 2 * h) + 8 * gauss_f(t, z + h) - 8 * gauss_f(t, z - h)
          + gauss_f(t, z - 2 * h)) / (12 * h)
    d = gauss_f_dz(t, z)
    assert abs(d - fd) <= 1e-7 * max(1.0, abs(d))


def test_contiguous_examples():
    c0 = contiguous_shift(HypergeomTriple(1.0, 1.0, 2.0), 0.0)
    assert c0.lhs == 0.0 and c0.rhs == 0.0
    assert abs(contiguous_shift(HypergeomTriple(1.0, 1.0, 2.0), 0.5).residual) < 1e-9
    c = contiguous_shift(HypergeomTriple(1.7, 0.0, 3.1), 0.6)
    assert abs(c.rhs - (hyp2f1(1.7, 1.0, 3.1, 0.6) - 1.0)) < 1e-15
    assert abs(c.residual) < 1e-9


@settings(max_examples=150, deadline=None)
@given(t=triples, z=st.floats(0.0, 0.99))
def test_contiguous_property(t, z):
    c = contiguous_shift(t, z)
    assert abs(c.residual) <= 1e-9 * max(1.0, abs(c.rhs), abs(c.lhs))


def test_domain_errors():
    with pytest.raises(ValueError):
        hyp2f1(1, 1, 2, 1.0)
    with pytest.raises(ValueError):
        hyp2f1(1, 1, 2, -0.1)
    with pytest.raises(ValueError):
        hyp2f1(2, 1, 2, 0.5)
    with pytest.raises(ValueError):
        hyp2f1(0, 1, 2, 0.5)
    with pytest.raises(ValueError):
        hyp2f1(1, 1, 2, 0.5, method="bogus")

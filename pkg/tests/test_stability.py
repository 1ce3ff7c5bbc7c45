import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randtaylor.core import RationalComplex, f_direct, step_coeffs
from randtaylor.quadrature import adaptive_integrate, locate_step_root
from randtaylor.stability import (InclusionViolation, Membership, as_function,
                                  as_function_decomposed, as_function_paths, check_first_inclusion,
                                  classify, ms_function, ms_function_exact, ref_sq, tristate)

Q = Fraction


def test_hand_values_at_minus_one():
    assert ms_function_exact(0, RationalComplex(-1)) == Q(1, 3)
    assert ref_sq(0, RationalComplex(-1)) == Q(1, 4)
    assert abs(as_function(0, -1.0) + 1.0) < 1e-6


@pytest.mark.parametrize("r", range(9))
def test_origin_on_all_boundaries(r):
    assert ms_function(r, 0j) == 1.0
    assert as_function(r, 0j) == 0.0
    assert ref_sq(r, 0j) == 1.0
    assert ms_function_exact(r, RationalComplex(0)) == 1
    v = classify(r, 0j)
    assert (v.in_ms, v.in_as, v.in_ref) == (Membership.MARGINAL,) * 3


def test_tristate():
    assert tristate(0.5, 1.0, 1e-9) == Membership.IN
    assert tristate(1.0, 1.0, 1e-9) == Membership.MARGINAL
    assert tristate(2.0, 1.0, 1e-9) == Membership.OUT
    arr = tristate(np.array([0.5, 1.0, 2.0]), 1.0, 1e-9)
    assert arr.tolist() == [1, 2, 0]


def test_closed_form_F_vs_quadrature_100_points():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        r = int(rng.integers(0, 5))
        z = complex(*rng.uniform(-4, 4, 2))
        c = step_coeffs(r, z)
        brute = adaptive_integrate(lambda t: np.abs(c(t)) ** 2)
        worst = max(worst, abs(ms_function(r, z) - brute) / max(1.0, brute))
    assert worst <= 1e-10


def test_F_exact_matches_double():
    z = RationalComplex(Q(-3, 100), Q(19, 10))
    assert abs(float(ms_function_exact(2, z)) - ms_function(2, complex(z))) < 1e-13


def test_G_paths_agree_200_nonsingular():
    rng = np.random.default_rng(5)
    n = worst = 0
    while n < 200:
        r = int(rng.integers(0, 5))
        z = complex(*rng.uniform(-6, 6, 2))
        if abs(z) > 6 or locate_step_root(r, z).has_real_root:
            continue
        worst = max(worst, as_function_paths(r, z).disagreement)
        n += 1
    assert worst <= 1e-6


def test_G_singular_point_is_finite():
    g = as_function(0, -1.0)
    assert math.isfinite(g)
    assert abs(g - as_function_decomposed(0, -1.0)) < 1e-8


def test_decomposition_vectorized():
    z = np.array([-2.1, -1 + 1.6j, 0.5j, 3 - 3j])
    vec = as_function_decomposed(0, z)
    assert np.allclose(vec, [as_function_decomposed(0, complex(x)) for x in z], atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 6),
       st.fractions(-6, 6, max_denominator=200), st.fractions(-6, 6, max_denominator=200))
def test_conjugation_exact_F_and_ref(r, a, b):
    z = RationalComplex(a, b)
    assert ms_function_exact(r, z) == ms_function_exact(r, z.conjugate())
    assert ref_sq(r, z) == ref_sq(r, z.conjugate())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 4), st.floats(-6, 6), st.floats(0.01, 6))
def test_conjugation_G(r, x, y):
    assert abs(as_function(r, complex(x, y)) - as_function(r, complex(x, -y))) <= 1e-8


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 8), st.floats(-8, 8), st.floats(-8, 8))
def test_jensen_inequality(r, x, y):
    z = complex(x, y)
    f, q = ms_function(r, z), ref_sq(r, z)
    assert f >= q - 1e-12 * max(1.0, q)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 6), st.fractions(-6, 6, max_denominator=50),
       st.fractions(-6, 6, max_denominator=50))
def test_jensen_exact(r, a, b):
    z = RationalComplex(a, b)
    assert ms_function_exact(r, z) >= ref_sq(r, z)


@pytest.mark.parametrize("r", range(5))
def test_positive_real_exclusion(r):
    for x in np.arange(0.0, 6.0001, 0.1):
        assert ms_function(r, x) >= 1.0
        assert as_function(r, x) >= 0.0
        assert ref_sq(r, x) >= 1.0


@pytest.mark.parametrize("r", range(5))
def test_continuity_smoke(r):
    rng = np.random.default_rng(100 + r)
    eta = 1e-4
    pts = []
    while len(pts) < 100:
        z = 5 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        c = step_coeffs(r, z)
        # keep clear of the real-root locus, where G has a log-type kink
        t = np.linspace(0, 1, 401)
        if abs(z) > 1e-2 and np.min(np.abs(c(t))) > 1e-2 * max(1.0, abs(c.tail)):
            pts.append(z)
    for fn in (ms_function, as_function):
        # C is fitted from a finer difference quotient over the same sample
        fine = np.array([abs(fn(r, z + eta / 10) - fn(r, z)) / (eta / 10) for z in pts])
        coarse = np.array([abs(fn(r, z + eta) - fn(r, z)) for z in pts])
        C = 1.5 * fine.max() + 1e-6
        assert np.all(coarse <= C * eta)


def test_classify_remark_points():
    v = classify(0, -2.1, g_band=1e-6)
    assert v.in_as == Membership.IN and v.in_ref == Membership.OUT
    v = classify(0, -1 + 1.6j, g_band=1e-6)
    assert v.in_as == Membership.OUT and v.in_ref == Membership.IN
    d = v.as_dict()
    assert set(d) >= {"ms", "as", "ref", "F", "G", "ref_sq"}


def test_inclusion_guard():
    assert check_first_inclusion(Membership.IN, Membership.IN, Membership.MARGINAL)
    assert not check_first_inclusion(Membership.IN, Membership.OUT, Membership.IN)
    assert issubclass(InclusionViolation, AssertionError)
    with pytest.raises(ValueError):
        classify(0, -1.0, band=-1)


def test_direct_sum_oracle():
    for r in range(5):
        z = -0.7 + 1.3j
        for t in (0.0, 0.37, 1.0):
            assert abs(step_coeffs(r, z)(t) - f_direct(r, z, t)) < 1e-13

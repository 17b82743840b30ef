"""Tests for the series evaluators against extended-precision references."""

import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from src.errors import ConvergenceError, ParameterError
from src.special_functions import bessel_i, hyper_0f3, sum_series, sum_terms

mpmath.mp.dps = 40


def test_bessel_at_zero():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 0.0) == 0.0


def test_bessel_known_value():
    assert bessel_i(0, 2.0) == pytest.approx(2.2795853023360673, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.floats(min_value=1e-3, max_value=50.0))
def test_bessel_matches_mpmath(order, z):
    reference = float(mpmath.besseli(order, z))
    assert bessel_i(order, z) == pytest.approx(reference, rel=1e-12)


@pytest.mark.parametrize("order,z", [(0, 0.5), (1, 3.0), (5, 10.0), (3, 42.0)])
def test_bessel_matches_scipy(order, z):
    assert bessel_i(order, z) == pytest.approx(special.iv(order, z), rel=1e-12)


def test_bessel_rejects_invalid():
    with pytest.raises(ParameterError):
        bessel_i(-1, 1.0)
    with pytest.raises(ParameterError):
        bessel_i(1, -1.0)
    with pytest.raises(ParameterError):
        bessel_i(0, float("inf"))


def test_hyper_at_zero():
    for m in range(1, 7):
        assert hyper_0f3(m, m, m, 0.0) == 1.0


def test_hyper_unit_parameters_term_by_term():
    z = 2.5
    direct = sum(z ** n / math.factorial(n) ** 4 for n in range(40))
    assert hyper_0f3(1, 1, 1, z) == pytest.approx(direct, rel=1e-14)


def test_hyper_matches_mpmath():
    assert hyper_0f3(2, 2, 2, 1.0) == pytest.approx(float(mpmath.hyper([], [2, 2, 2], 1)), rel=1e-12)


@pytest.mark.parametrize("b,z", [(1, 100.0), (3, 576.0), (6, 5184.0), (2.5, -4.0)])
def test_hyper_grid_matches_mpmath(b, z):
    reference = float(mpmath.hyper([], [b, b, b], z))
    assert hyper_0f3(b, b, b, z) == pytest.approx(reference, rel=1e-12)


def test_hyper_rejects_nonpositive_integer_parameter():
    with pytest.raises(ParameterError):
        hyper_0f3(0, 1, 1, 1.0)
    with pytest.raises(ParameterError):
        hyper_0f3(1, -2, 1, 1.0)


def test_series_term_cap():
    with pytest.raises(ConvergenceError):
        sum_series(1.0, lambda n: 1.0)
    with pytest.raises(ConvergenceError):
        sum_terms(lambda n: 1.0)


def test_series_reports_terms():
    value, terms = sum_series(1.0, lambda n: 0.5)
    assert value == pytest.approx(2.0)
    assert 50 < terms < 70

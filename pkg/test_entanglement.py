"""Tests for Schmidt decomposition and entanglement measures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.deformed_algebra import build_system, monomial_vector
from src.entanglement import (
    SchmidtSpectrum,
    measure,
    measure_state,
    reduced_density_check,
    reduced_density_matrices,
    report,
    schmidt_decompose,
)
from src.errors import ParameterError
from src.fock_core import ProductSpace, StateVector, Statistics, make_space, vacuum
from src.phi_family import UnitarySpec, build_phi_family


def _random_state(rng, d_a, d_b):
    matrix = rng.normal(size=(d_a, d_b)) + 1j * rng.normal(size=(d_a, d_b))
    return matrix / np.linalg.norm(matrix)


def test_product_state_is_separable():
    result = measure(np.outer([1.0, 0.0], [0.0, 1.0]))
    assert result.rank == 1
    assert result.schmidt_number == pytest.approx(1.0)
    assert result.entropy == pytest.approx(0.0, abs=1e-15)
    assert result.concurrence == 0.0


def test_bell_state():
    result = measure(np.eye(2) / math.sqrt(2.0))
    assert result.rank == 2
    assert result.schmidt_number == pytest.approx(2.0)
    assert result.purity == pytest.approx(0.5)
    assert result.entropy == pytest.approx(math.log(2.0))
    assert result.entropy_bits == pytest.approx(1.0)
    assert result.concurrence == pytest.approx(1.0)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
def test_uniform_spectrum(m):
    result = report(SchmidtSpectrum(tuple([1.0 / math.sqrt(m)] * m)))
    assert result.rank == m
    assert result.schmidt_number == pytest.approx(m, abs=1e-10)
    assert result.entropy == pytest.approx(math.log(m), abs=1e-10)
    assert result.concurrence == (pytest.approx(1.0, abs=1e-10) if m > 1 else 0.0)


def test_serialization_aliases():
    payload = measure(np.eye(2) / math.sqrt(2.0)).to_dict(bits=True)
    assert {"rank", "K", "P", "S_nats", "C", "S_bits"} <= set(payload)
    assert payload["S_bits"] == pytest.approx(1.0)


def test_unnormalized_input_is_flagged():
    spectrum = schmidt_decompose(2.0 * np.eye(2))
    assert spectrum.renormalized
    assert sum(spectrum.weights) == pytest.approx(1.0)

    with pytest.raises(ParameterError):
        schmidt_decompose(np.zeros((2, 3)))


def test_decomposition_reconstructs():
    rng = np.random.default_rng(3)
    matrix = _random_state(rng, 3, 5)
    decomposition = schmidt_decompose(matrix, return_vectors=True)
    np.testing.assert_allclose(decomposition.reconstruct(), matrix, atol=1e-12)
    assert list(decomposition.spectrum.lambdas) == sorted(decomposition.spectrum.lambdas, reverse=True)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.integers(2, 4), st.integers(2, 4))
def test_local_unitaries_leave_measures_invariant(seed, d_a, d_b):
    rng = np.random.default_rng(seed)
    matrix = _random_state(rng, d_a, d_b)
    u, _ = np.linalg.qr(rng.normal(size=(d_a, d_a)) + 1j * rng.normal(size=(d_a, d_a)))
    v, _ = np.linalg.qr(rng.normal(size=(d_b, d_b)) + 1j * rng.normal(size=(d_b, d_b)))

    before = measure(matrix)
    after = measure(u @ matrix @ v.T)
    assert after.schmidt_number == pytest.approx(before.schmidt_number, rel=1e-10)
    assert after.entropy == pytest.approx(before.entropy, abs=1e-10)


def test_reduced_density_matrices_have_unit_trace():
    rng = np.random.default_rng(5)
    rho_a, rho_b = reduced_density_matrices(_random_state(rng, 2, 3))
    assert rho_a.shape == (2, 2) and rho_b.shape == (3, 3)
    assert np.trace(rho_a).real == pytest.approx(1.0)
    assert np.trace(rho_b).real == pytest.approx(1.0)
    np.testing.assert_allclose(rho_a, rho_a.conj().T, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_density_route_agrees_with_spectrum(seed):
    rng = np.random.default_rng(seed)
    space_a = make_space(Statistics.FERMIONIC, 2, 2)
    space_b = make_space(Statistics.FERMIONIC, 3, 3)
    product = ProductSpace(space_a, space_b)
    state = StateVector(product, _random_state(rng, space_a.dim, space_b.dim).reshape(-1))

    check = reduced_density_check(state)
    assert check.passed
    assert check.schmidt_number_a == pytest.approx(measure_state(state).schmidt_number, rel=1e-10)


def test_non_uniform_spectrum():
    result = report(SchmidtSpectrum((math.sqrt(0.8), math.sqrt(0.2))))
    assert result.rank == 2
    assert result.purity == pytest.approx(0.68)
    assert result.schmidt_number == pytest.approx(1.0 / 0.68)
    assert result.entropy == pytest.approx(-0.8 * math.log(0.8) - 0.2 * math.log(0.2))
    assert result.entropy == pytest.approx(0.5004, abs=1e-4)
    assert result.concurrence == pytest.approx(0.8)


def test_density_route_on_single_quasiboson():
    system = build_system(build_phi_family(2, 2, 2, 1))
    one = system.creation(1).apply(vacuum(system.product).amplitudes)
    check = reduced_density_check(StateVector(system.product, one))
    assert check.passed
    assert check.schmidt_number_a == pytest.approx(2.0, abs=1e-12)
    assert check.entropy_a == pytest.approx(math.log(2.0), abs=1e-12)
    # rho_a is the uniform mixture over the m Schmidt vectors
    assert check.uniform_mixture_residual < 1e-12


def test_density_route_on_two_bosonic_quasibosons():
    seeded = UnitarySpec.seeded(6)
    system = build_system(build_phi_family(3, 3, 2, 1, seeded, seeded, seeded, epsilon=-1), max_quanta=2)
    pair = monomial_vector(system, [2])
    check = reduced_density_check(StateVector(system.product, pair / np.linalg.norm(pair)))
    assert check.passed
    assert check.schmidt_number_a == pytest.approx(3.0, abs=1e-10)
    assert check.schmidt_number_b == pytest.approx(3.0, abs=1e-10)
    assert check.uniform_mixture_residual < 1e-10

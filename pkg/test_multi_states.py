"""Tests for multi-quasiboson measures, coherent states and the explicit oracle."""

import json
import math

import pytest

from src.deformed_algebra import DeformationSpec
from src.errors import NilpotencyError, NormalizationError, ParameterError
from src.multi_states import (
    CoherentParams,
    Wavefunction,
    bessel_i,
    coherent_entropy,
    coherent_entropy_expansion,
    coherent_K,
    coherent_K_expansion,
    coherent_measures,
    coherent_normalization,
    coherent_normalization_expansion,
    coherent_wavefunction,
    distinct_modes_measures,
    distinct_modes_wavefunction,
    fock_state_measures,
    fock_wavefunction,
    general_state_measures,
    lambda_coefficients,
    multiplicity,
    oracle_measures,
    superposition,
)

ORACLE_TOLERANCE = 1e-8


def _fock_cases():
    return [
        (epsilon, m, k)
        for epsilon in (1, -1)
        for m in (1, 2, 3)
        for k in (1, 2, 3)
        if epsilon == -1 or k <= m
    ]


def test_multiplicity_examples():
    assert multiplicity(2, 1, 1) == 2
    assert multiplicity(2, 2, -1) == 3
    assert multiplicity(3, 3, 1) == 1
    assert multiplicity(4, 0, 1) == 1
    with pytest.raises(NilpotencyError):
        multiplicity(2, 3, 1)


def test_fock_state_closed_forms():
    fermions = fock_state_measures(3, 2, 1)
    assert fermions.schmidt_number == 3
    assert fermions.entropy == pytest.approx(math.log(3))

    bosons = fock_state_measures(3, 2, -1)
    assert bosons.schmidt_number == 6
    assert bosons.entropy == pytest.approx(math.log(6))

    for epsilon in (1, -1):
        single = fock_state_measures(5, 1, epsilon)
        assert single.schmidt_number == 5
        assert single.entropy == pytest.approx(math.log(5))


def test_distinct_modes_closed_forms():
    result = distinct_modes_measures(2, 2)
    assert result.schmidt_number == 4
    assert result.entropy == pytest.approx(2 * math.log(2))
    assert distinct_modes_measures(7, 1).schmidt_number == 7
    with pytest.raises(ParameterError):
        distinct_modes_measures(2, 0)


def test_vacuum_wavefunction_is_separable():
    psi = Wavefunction.from_mapping(DeformationSpec(1, 3), ["1"], [({}, 1.0)])
    result = general_state_measures(psi)
    assert result.schmidt_number == pytest.approx(1.0)
    assert result.entropy == pytest.approx(0.0)


@pytest.mark.parametrize("epsilon,m,k", _fock_cases())
def test_general_measures_reduce_to_fock(epsilon, m, k):
    general = general_state_measures(fock_wavefunction(m, k, epsilon))
    closed = fock_state_measures(m, k, epsilon)
    assert general.schmidt_number == pytest.approx(closed.schmidt_number, rel=1e-12)
    assert general.entropy == pytest.approx(closed.entropy, abs=1e-12)


def test_unnormalized_wavefunction_is_rejected():
    psi = Wavefunction.from_mapping(DeformationSpec(1, 2), ["1"], [({"1": 1}, 2.0)])
    with pytest.raises(NormalizationError):
        general_state_measures(psi)
    assert general_state_measures(psi.renormalized()).schmidt_number == pytest.approx(2.0)


def test_nilpotency_guard():
    with pytest.raises(NilpotencyError):
        Wavefunction.from_mapping(DeformationSpec(1, 2), ["1"], [({"1": 3}, 1.0)])
    with pytest.raises(NilpotencyError):
        fock_wavefunction(2, 3, 1)
    # bosonic constituents are not nilpotent
    assert fock_wavefunction(2, 3, -1).max_total == 3


def test_wavefunction_label_checks():
    with pytest.raises(ParameterError):
        Wavefunction.from_mapping(DeformationSpec(1, 2), ["1"], [({"2": 1}, 1.0)])
    with pytest.raises(ParameterError):
        Wavefunction.from_mapping(DeformationSpec(1, 2), ["1", "1"], [({"1": 1}, 1.0)])


def test_lambda_coefficients_carry_the_norm():
    psi = superposition([({"1": 2}, 1.0), ({"1": 1, "2": 1}, 1.0j)], DeformationSpec(-1, 3))
    rows = lambda_coefficients(psi)
    assert len(rows) == 2
    assert sum(count * value ** 2 for _, value, count in rows) == pytest.approx(1.0, rel=1e-12)


def test_superposition_matches_data_file(data_dir):
    loaded = Wavefunction.from_file(json.loads((data_dir / "wavefunction_superposition.json").read_text()))
    built = superposition([({"1": 1}, 1.0), ({"2": 1}, 1.0)], DeformationSpec(1, 2))
    assert general_state_measures(loaded).schmidt_number == pytest.approx(4.0)
    assert general_state_measures(built).schmidt_number == pytest.approx(4.0)
    assert general_state_measures(built).entropy == pytest.approx(math.log(4.0))


def test_superposition_agrees_with_oracle(data_dir):
    psi = Wavefunction.from_file(json.loads((data_dir / "wavefunction_superposition.json").read_text()))
    closed = general_state_measures(psi)
    oracle = oracle_measures(psi)
    assert oracle.schmidt_number == pytest.approx(closed.schmidt_number, abs=ORACLE_TOLERANCE)
    assert oracle.entropy == pytest.approx(closed.entropy, abs=ORACLE_TOLERANCE)


def test_wavefunction_file_round_trip():
    psi = superposition([({"a": 1}, 1.0), ({"b": 2}, 0.5 - 0.5j)], DeformationSpec(-1, 2))
    restored = Wavefunction.from_file(json.loads(json.dumps(psi.to_file().model_dump())))
    assert restored.modes == psi.modes
    assert dict(restored.amplitudes) == pytest.approx(dict(psi.amplitudes))


@pytest.mark.parametrize("epsilon,m,k", _fock_cases())
def test_fock_oracle(epsilon, m, k):
    oracle = oracle_measures(fock_wavefunction(m, k, epsilon))
    closed = fock_state_measures(m, k, epsilon)
    assert oracle.schmidt_number == pytest.approx(closed.schmidt_number, abs=ORACLE_TOLERANCE)
    assert oracle.entropy == pytest.approx(math.log(oracle.schmidt_number), abs=ORACLE_TOLERANCE)


@pytest.mark.parametrize("epsilon", [1, -1])
@pytest.mark.parametrize("m", [2, 3])
def test_distinct_modes_oracle(epsilon, m):
    oracle = oracle_measures(distinct_modes_wavefunction(m, 2, epsilon), seed=5)
    assert oracle.schmidt_number == pytest.approx(m ** 2, abs=ORACLE_TOLERANCE)
    assert oracle.entropy == pytest.approx(2 * math.log(m), abs=ORACLE_TOLERANCE)


def test_single_quasiboson_oracle():
    for epsilon in (1, -1):
        oracle = oracle_measures(fock_wavefunction(4, 1, epsilon), d_a=5, d_b=6, seed=2)
        assert oracle.schmidt_number == pytest.approx(4.0, abs=ORACLE_TOLERANCE)
        assert oracle.entropy == pytest.approx(math.log(4.0), abs=ORACLE_TOLERANCE)


def test_oracle_rejects_small_spaces():
    with pytest.raises(ParameterError):
        oracle_measures(distinct_modes_wavefunction(2, 2, 1), d_a=3, d_b=4)
    with pytest.raises(ParameterError):
        oracle_measures(fock_wavefunction(2, 3, -1), cutoffs=(2, 3))


def test_coherent_requires_bosons():
    with pytest.raises(ParameterError):
        CoherentParams(amplitude=0.5, m=2, epsilon=1)


def test_coherent_vacuum():
    params = CoherentParams(amplitude=0.0, m=3)
    assert coherent_normalization(params) == 1.0
    assert coherent_K(params) == 1.0
    assert coherent_entropy(params) == 0.0


@pytest.mark.parametrize("amplitude", [0.1, 0.7, 1.5])
def test_coherent_normalization_m1_is_bessel_i0(amplitude):
    params = CoherentParams(amplitude=amplitude, m=1)
    assert coherent_normalization(params) == pytest.approx(bessel_i(0, 2 * amplitude) ** -0.5, rel=1e-12)


@pytest.mark.parametrize("m", range(1, 7))
@pytest.mark.parametrize("amplitude", [0.0, 0.25, 0.5, 1.0, 1.5, 2.0])
def test_coherent_normalization_matches_direct_series(m, amplitude):
    x = amplitude ** 2
    direct = sum(
        (x * m) ** n / (math.factorial(n) ** 2 * math.comb(m + n - 1, n)) for n in range(80)
    )
    params = CoherentParams(amplitude=amplitude, m=m)
    assert coherent_normalization(params) == pytest.approx(direct ** -0.5, rel=1e-12)
    # both K routes agree internally or coherent_K raises
    assert coherent_K(params) >= 1.0 - 1e-12


def test_coherent_normalization_small_amplitude():
    for m in (2, 3, 5):
        exact = coherent_normalization(CoherentParams(amplitude=0.1, m=m))
        printed = coherent_normalization_expansion(CoherentParams(amplitude=0.1, m=m))
        assert abs(exact - printed) < 1e-5

        # the printed correction is leading order in 1/m; the exact one is x^2 / (4(m+1))
        params = CoherentParams(amplitude=0.05, m=m)
        x = params.x
        gap = coherent_normalization(params) - coherent_normalization_expansion(params)
        assert abs(gap + x * x / (4 * m * (m + 1))) < 1e-7


def test_coherent_K_small_amplitude():
    params = CoherentParams(amplitude=0.1, m=5)
    exact, printed = coherent_K(params), coherent_K_expansion(params)
    assert abs(exact / printed - 1.0) < 1e-5
    x = params.x
    assert abs(exact / printed - 1.0 - x * x / (5 * 6)) < 1e-6

    large_m = CoherentParams(amplitude=0.1, m=20)
    assert abs(coherent_K(large_m) / coherent_K_expansion(large_m) - 1.0) < 1e-6


def test_coherent_entropy_small_amplitude():
    params = CoherentParams(amplitude=0.1, m=4)
    assert abs(coherent_entropy(params) - coherent_entropy_expansion(params)) < 1e-4

    tiny = CoherentParams(amplitude=0.01, m=4)
    x, m = tiny.x, tiny.m
    log_term = math.log(m / x)
    second_order = (
        x * log_term + x
        - x * x / (m + 1) * log_term
        + x * x * (-0.5 / (m + 1) + (m / (m + 1)) * math.log(1 + 1 / m))
    )
    assert coherent_entropy(tiny) == pytest.approx(second_order, abs=1e-9)


def test_coherent_measures_are_phase_independent():
    first = coherent_measures(CoherentParams.polar(0.8, 0.0, 3))
    second = coherent_measures(CoherentParams.polar(0.8, 1.3, 3))
    assert first.schmidt_number == pytest.approx(second.schmidt_number, rel=1e-14)
    assert first.entropy == pytest.approx(second.entropy, rel=1e-14)
    assert first.series_terms > 0


def test_coherent_K_increases_with_amplitude():
    values = [coherent_K(CoherentParams(amplitude=a / 10, m=4)) for a in range(11)]
    assert values[0] == 1.0
    assert all(later > earlier for earlier, later in zip(values, values[1:]))


def test_coherent_truncation_and_general_measures():
    params = CoherentParams(amplitude=0.5, m=2)
    psi, n_star = coherent_wavefunction(params)
    assert n_star == 7
    assert psi.norm_squared() == pytest.approx(1.0, abs=1e-12)

    general = general_state_measures(psi)
    assert general.schmidt_number == pytest.approx(coherent_K(params), abs=ORACLE_TOLERANCE)
    assert general.entropy == pytest.approx(coherent_entropy(params), abs=ORACLE_TOLERANCE)


def test_coherent_oracle():
    params = CoherentParams.polar(0.5, 0.4, 2)
    psi, _ = coherent_wavefunction(params)
    oracle = oracle_measures(psi, seed=1)
    assert oracle.schmidt_number == pytest.approx(coherent_K(params), abs=ORACLE_TOLERANCE)
    assert oracle.entropy == pytest.approx(coherent_entropy(params), abs=ORACLE_TOLERANCE)

"""End-to-end tests of the command-line surface."""

import csv
import json
import math

import pytest

from src.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main
from src.phi_family import PhiFamily


def _run_json(tmp_path, *argv):
    out = tmp_path / "out.json"
    code = main([*argv, "--output", str(out)])
    payload = json.loads(out.read_text()) if out.exists() else None
    return code, payload


def _run_csv(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--output", str(out)])
    return code, out.read_text()


def test_verify_passes(tmp_path):
    code, payload = _run_json(
        tmp_path, "verify", "--epsilon", "+1", "--m", "2", "--da", "4", "--db", "4", "--modes", "2", "--seed", "7"
    )
    assert code == EXIT_OK
    assert payload["passed"] is True
    assert payload["failed_checks"] == []
    assert payload["realization"]["nilpotency_orders"] == [3, 3]


def test_verify_bosonic_single_mode(tmp_path):
    code, payload = _run_json(tmp_path, "verify", "--epsilon", "-1", "--m", "2", "--n-max", "2")
    assert code == EXIT_OK
    assert payload["realization"]["expected_nilpotency"] is None


def test_verify_tampered_family_fails(tmp_path, data_dir):
    code, payload = _run_json(
        tmp_path, "verify", "--phi-file", str(data_dir / "phi_family_tampered.json"), "--n-max", "2"
    )
    assert code == EXIT_FAILED
    assert payload["passed"] is False
    assert "realization.structure_function" in payload["failed_checks"]
    assert "family.cubic" in payload["failed_checks"]


def test_verify_sample_family_file(tmp_path, data_dir):
    code, payload = _run_json(tmp_path, "verify", "--phi-file", str(data_dir / "phi_family_m2.json"), "--n-max", "2")
    assert code == EXIT_OK
    assert payload["realization"]["nilpotency_orders"] == [3]


def test_verify_rejects_blocks_that_do_not_fit(tmp_path):
    code, _ = _run_json(tmp_path, "verify", "--m", "3", "--da", "2", "--db", "2")
    assert code == EXIT_USAGE


def test_verify_dumps_family(tmp_path):
    dumped = tmp_path / "family" / "phi.json"
    code, _ = _run_json(tmp_path, "verify", "--m", "2", "--n-max", "2", "--seed", "3", "--dump-family", str(dumped))
    assert code == EXIT_OK
    family = PhiFamily.from_file(json.loads(dumped.read_text()))
    assert family.m == 2 and family.n_modes == 1


def test_single_measures(tmp_path):
    code, payload = _run_json(tmp_path, "single", "--m", "3", "--bits")
    assert code == EXIT_OK
    measures = payload["measures"]
    assert measures["rank"] == 3
    assert measures["K"] == pytest.approx(3.0)
    assert measures["S_nats"] == pytest.approx(math.log(3))
    assert measures["S_bits"] == pytest.approx(math.log2(3))
    assert measures["C"] == pytest.approx(1.0)


def test_fock_measures(tmp_path):
    code, payload = _run_json(tmp_path, "fock", "--epsilon", "-1", "--m", "3", "--occupation", "2")
    assert code == EXIT_OK
    assert payload["measures"]["K"] == pytest.approx(6.0)
    assert payload["parameters"] == {"epsilon": -1, "m": 3, "occupation": 2}


def test_fock_above_m_is_a_usage_error(tmp_path):
    code, _ = _run_json(tmp_path, "fock", "--epsilon", "+1", "--m", "2", "--occupation", "3")
    assert code == EXIT_USAGE


def test_modes_with_oracle(tmp_path):
    code, payload = _run_json(tmp_path, "modes", "--m", "2", "--n", "2", "--with-oracle")
    assert code == EXIT_OK
    assert payload["measures"]["K"] == pytest.approx(4.0)
    assert payload["oracle_passed"] is True


def test_coherent_with_oracle(tmp_path):
    code, payload = _run_json(tmp_path, "coherent", "--m", "2", "--amp", "0.5", "--with-oracle")
    assert code == EXIT_OK
    assert payload["parameters"]["epsilon"] == -1
    assert payload["oracle"]["n_star"] == 7
    assert payload["delta"]["K"] < 1e-8
    assert payload["delta"]["S_nats"] < 1e-8


def test_coherent_rejects_fermions(tmp_path):
    code, _ = _run_json(tmp_path, "coherent", "--epsilon", "+1", "--m", "2", "--amp", "0.5")
    assert code == EXIT_USAGE


def test_state_from_file(tmp_path, data_dir):
    code, payload = _run_json(tmp_path, "state", "--file", str(data_dir / "wavefunction_superposition.json"))
    assert code == EXIT_OK
    assert payload["measures"]["K"] == pytest.approx(4.0)
    assert payload["measures"]["S_nats"] == pytest.approx(math.log(4))


def test_state_missing_file(tmp_path):
    code, _ = _run_json(tmp_path, "state", "--file", str(tmp_path / "missing.json"))
    assert code == EXIT_USAGE


def test_unnormalized_state_fails_unless_renormalized(tmp_path):
    wavefunction = tmp_path / "psi.json"
    wavefunction.write_text(json.dumps({
        "epsilon": 1,
        "m": 2,
        "modes": ["1"],
        "amplitudes": [{"config": {"1": 1}, "re": 2.0, "im": 0.0}],
    }))
    code, _ = _run_json(tmp_path, "state", "--file", str(wavefunction))
    assert code == EXIT_FAILED

    code, payload = _run_json(tmp_path, "state", "--file", str(wavefunction), "--renormalize")
    assert code == EXIT_OK
    assert payload["measures"]["K"] == pytest.approx(2.0)


def test_oracle_command(tmp_path):
    code, payload = _run_json(tmp_path, "oracle", "--family", "fock", "--m", "2", "--occupation", "2", "--seed", "4")
    assert code == EXIT_OK
    assert payload["family"] == "fock"
    assert payload["oracle"]["K"] == pytest.approx(1.0, abs=1e-8)


def test_scan_single_entropy_column(tmp_path):
    code, text = _run_csv(tmp_path, "scan", "--family", "single", "--m-values", "1:10:1")
    assert code == EXIT_OK
    rows = list(csv.DictReader(text.splitlines()))
    assert [int(row["m"]) for row in rows] == list(range(1, 11))
    for row in rows:
        assert float(row["S_nats"]) == pytest.approx(math.log(int(row["m"])), abs=1e-12)
        assert row["error"] == ""


def test_scan_coherent_K_increases(tmp_path):
    code, text = _run_csv(tmp_path, "scan", "--family", "coherent", "--m-values", "4", "--amp-values", "0:1:0.1")
    assert code == EXIT_OK
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 11
    values = [float(row["K"]) for row in rows]
    assert values[0] == 1.0
    assert all(later > earlier for earlier, later in zip(values, values[1:]))


def test_scan_empty_grid_writes_header(tmp_path):
    code, text = _run_csv(tmp_path, "scan", "--family", "single")
    assert code == EXIT_OK
    assert text == "m,rank,K,P,S_nats,C,error\n"


def test_scan_records_failed_points(tmp_path):
    code, text = _run_csv(
        tmp_path, "scan", "--family", "fock", "--epsilon", "+1", "--m-values", "2", "--occupation-values", "1,3"
    )
    assert code == EXIT_FAILED
    rows = list(csv.DictReader(text.splitlines()))
    assert rows[0]["error"] == ""
    assert rows[1]["error"].startswith("NilpotencyError")


def test_scan_output_is_deterministic(tmp_path):
    argv = ("scan", "--family", "modes", "--m-values", "1,2,3", "--n-values", "1:3:1")
    _, first = _run_csv(tmp_path, *argv, name="first.csv")
    _, second = _run_csv(tmp_path, *argv, name="second.csv")
    assert first == second
    assert first.splitlines()[0] == "m,n,K,S_nats,error"


def test_table_format(tmp_path):
    code, text = _run_csv(tmp_path, "fock", "--m", "3", "--occupation", "1", "--format", "table", name="out.txt")
    assert code == EXIT_OK
    assert text.splitlines()[0].split()[0] == "command"


def test_bad_epsilon_is_a_usage_error(tmp_path):
    code, _ = _run_json(tmp_path, "single", "--m", "2", "--epsilon", "0")
    assert code == EXIT_USAGE


def test_missing_required_field(tmp_path):
    code, _ = _run_json(tmp_path, "fock", "--m", "2")
    assert code == EXIT_USAGE


def test_help_exits_cleanly():
    assert main(["--help"]) == EXIT_OK


def test_default_output_is_json(capsys):
    assert main(["single", "--m", "3"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["measures"]["K"] == pytest.approx(3.0)


def test_scan_still_defaults_to_csv(capsys):
    assert main(["scan", "--family", "single", "--m-values", "2"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "m,rank,K,P,S_nats,C,error"


def test_verify_default_degree_fits_fermionic_space(tmp_path):
    code, payload = _run_json(tmp_path, "verify", "--epsilon", "+1", "--m", "2")
    assert code == EXIT_OK
    assert payload["realization"]["n_max"] == 2
    assert payload["realization"]["nilpotency_orders"] == [3]


def test_verify_explicit_degree_above_fermionic_space(tmp_path):
    code, _ = _run_json(tmp_path, "verify", "--epsilon", "+1", "--m", "2", "--n-max", "3")
    assert code == EXIT_USAGE


def test_verify_malformed_family_file(tmp_path):
    bad = tmp_path / "bad_phi.json"
    bad.write_text(json.dumps({
        "epsilon": 1,
        "m": 2,
        "d_a": 2,
        "d_b": 2,
        "matrices": [[[{"re": 1.0, "im": 0.0}]]],
    }))
    code, payload = _run_json(tmp_path, "verify", "--phi-file", str(bad))
    assert code == EXIT_USAGE
    assert payload is None

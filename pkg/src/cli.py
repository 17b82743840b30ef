"""Command-line surface: verification, closed-form measures, oracle runs and scans.

Exit codes: 0 success, 1 failed check / validation / convergence, 2 usage or
parameter error.
"""

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from src.deformed_algebra import build_system, verify_realization
from src.entanglement import report
from src.errors import ConvergenceError, ParameterError, QuasibosonError, ValidationFailure
from src.logger import get_logger, setup_logger
from src.models import RunConfig, WavefunctionFile
from src.multi_states import (
    CoherentParams,
    Wavefunction,
    coherent_measures,
    coherent_normalization,
    coherent_wavefunction,
    distinct_modes_measures,
    distinct_modes_wavefunction,
    fock_state_measures,
    fock_wavefunction,
    general_state_measures,
    oracle_measures,
)
from src.phi_family import PhiFamily, UnitarySpec, build_phi_family, schmidt_of_phi, validate_family
from src.utils import dump_json, format_float, parse_epsilon, parse_grid

logger = get_logger()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

DEFAULT_SCAN_WORKERS = 4
DEFAULT_N_MAX = 3

# Measure columns per state family, in output order.
MEASURE_COLUMNS = {
    "single": ["rank", "K", "P", "S_nats", "C"],
    "fock": ["K", "S_nats"],
    "modes": ["K", "S_nats"],
    "coherent": ["K", "S_nats", "C_tilde", "series_terms"],
    "state": ["K", "S_nats"],
}
SCAN_PARAMETERS = {
    "single": ["m"],
    "fock": ["m", "occupation"],
    "modes": ["m", "n"],
    "coherent": ["m", "amplitude"],
}

Payload = Dict[str, Any]


def _seeded(seed: Optional[int]) -> Optional[UnitarySpec]:
    return UnitarySpec.seeded(seed) if seed is not None else None


def _with_bits(measures: Payload, bits: bool) -> Payload:
    if bits and "S_nats" in measures:
        measures["S_bits"] = measures["S_nats"] / math.log(2)
    return measures


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ParameterError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ParameterError(f"{path} is not valid JSON: {e}") from e


def _load_family(path: str) -> PhiFamily:
    try:
        return PhiFamily.from_file(_load_json(path))
    except ValidationError as e:
        raise ParameterError(f"invalid Phi family file {path}: {e}") from e


def _load_wavefunction(config: RunConfig) -> Wavefunction:
    try:
        data = WavefunctionFile.model_validate(_load_json(config.wavefunction_file))
    except ValidationError as e:
        raise ParameterError(f"invalid wavefunction file {config.wavefunction_file}: {e}") from e
    psi = Wavefunction.from_file(data)
    if config.renormalize:
        logger.warning(f"Renormalizing wavefunction (norm {psi.norm_squared():.12g})")
        psi = psi.renormalized()
    return psi


def _parameters(config: RunConfig, target: str) -> Payload:
    """Physics parameters echoed in the output."""
    params: Payload = {"epsilon": config.epsilon}
    if target in ("single", "fock", "modes", "coherent"):
        params["m"] = config.m
    if target == "fock":
        params["occupation"] = config.occupation
    if target == "modes":
        params["n"] = config.n
    if target == "coherent":
        params["amplitude"] = config.amplitude
        params["phase"] = config.phase
    if target == "state":
        params["file"] = config.wavefunction_file
    return params


def closed_form_measures(config: RunConfig, target: str) -> Payload:
    """
    Measures of one state family from the analytic formulas.

    Args:
        config: Validated run configuration
        target: single, fock, modes, coherent or state

    Returns:
        Measure payload keyed as in ``MEASURE_COLUMNS``
    """
    if target == "single":
        d_a = config.d_a or config.m
        d_b = config.d_b or config.m
        seeded = _seeded(config.seed)
        family = build_phi_family(d_a, d_b, config.m, 1, seeded, seeded, _seeded(config.block_seed), config.epsilon)
        entanglement = report(schmidt_of_phi(family.phi(1)))
        payload = entanglement.to_dict()
        payload.pop("tolerances", None)
        return payload
    if target == "fock":
        return fock_state_measures(config.m, config.occupation, config.epsilon).to_dict()
    if target == "modes":
        return distinct_modes_measures(config.m, config.n).to_dict()
    if target == "coherent":
        params = CoherentParams.polar(config.amplitude, config.phase, config.m)
        payload = coherent_measures(params).to_dict()
        payload["C_tilde"] = coherent_normalization(params)
        return payload
    if target == "state":
        return general_state_measures(_load_wavefunction(config)).to_dict()
    raise ParameterError(f"unknown state family {target!r}")


def _oracle_state(config: RunConfig, target: str) -> Tuple[Wavefunction, Payload]:
    if target == "single":
        return fock_wavefunction(config.m, 1, config.epsilon), {}
    if target == "fock":
        return fock_wavefunction(config.m, config.occupation, config.epsilon), {}
    if target == "modes":
        return distinct_modes_wavefunction(config.m, config.n, config.epsilon), {}
    if target == "coherent":
        psi, n_star = coherent_wavefunction(CoherentParams.polar(config.amplitude, config.phase, config.m))
        return psi, {"n_star": n_star}
    if target == "state":
        return _load_wavefunction(config), {}
    raise ParameterError(f"unknown state family {target!r}")


def oracle_payload(config: RunConfig, target: str, closed: Payload) -> Tuple[Payload, bool]:
    """Explicit-construction measures, deltas against ``closed`` and a pass flag."""
    psi, extra = _oracle_state(config, target)
    cutoffs = (config.cutoff, config.cutoff) if config.cutoff is not None else None
    measures = oracle_measures(psi, config.d_a, config.d_b, cutoffs, config.seed).to_dict()
    measures.update(extra)
    delta = {key: abs(closed[key] - measures[key]) for key in ("K", "S_nats")}
    passed = all(value <= config.oracle_tolerance for value in delta.values())
    if not passed:
        logger.warning(f"Oracle disagrees with closed form for {target}: {delta}")
    return {"oracle": measures, "delta": delta, "oracle_passed": passed}, passed


def cmd_verify(config: RunConfig) -> Tuple[Payload, bool]:
    """Validate a Phi family and verify the deformed-oscillator relations it induces."""
    if config.phi_file:
        family = _load_family(config.phi_file)
    else:
        d_a = config.d_a or config.n_modes * config.m
        d_b = config.d_b or d_a
        seeded = _seeded(config.seed)
        family = build_phi_family(
            d_a, d_b, config.m, config.n_modes, seeded, seeded, _seeded(config.block_seed), config.epsilon
        )
    if config.dump_family:
        _write(config.dump_family, dump_json(family.to_file().model_dump()))

    n_max = config.n_max
    if n_max is None:
        n_max = DEFAULT_N_MAX
        if family.epsilon == 1:
            # (A^dagger)^p vanishes identically above d on a complete fermionic space
            n_max = min(n_max, family.d_a, family.d_b)
    cutoff = config.cutoff if config.cutoff is not None else n_max + 1
    system = build_system(family, cutoff if family.epsilon == -1 else None)
    validation = validate_family(family, config.tolerance)
    realization = verify_realization(system, n_max, config.tolerance)

    failed = [f"family.{name}" for name in validation.failed_checks()]
    failed += [f"realization.{name}" for name in realization.failed_checks()]
    payload = {
        "family": validation.model_dump(),
        "realization": realization.model_dump(),
        "failed_checks": failed,
        "passed": not failed,
    }
    return payload, not failed


def cmd_measures(config: RunConfig) -> Tuple[Payload, bool]:
    """Closed-form measures for single, fock, modes, coherent and state."""
    target = config.command
    closed = closed_form_measures(config, target)
    payload: Payload = {"command": target, "parameters": _parameters(config, target)}
    passed = True
    if config.with_oracle:
        extra, passed = oracle_payload(config, target, closed)
        _with_bits(extra["oracle"], config.bits)
        payload.update(extra)
    payload["measures"] = _with_bits(closed, config.bits)
    return payload, passed


def cmd_oracle(config: RunConfig) -> Tuple[Payload, bool]:
    """Closed form and explicit construction side by side."""
    target = config.family
    closed = closed_form_measures(config, target)
    extra, passed = oracle_payload(config, target, closed)
    payload: Payload = {"command": "oracle", "family": target, "parameters": _parameters(config, target)}
    payload.update(extra)
    _with_bits(payload["oracle"], config.bits)
    payload["measures"] = _with_bits(closed, config.bits)
    return payload, passed


def _scan_points(config: RunConfig) -> List[Dict[str, Any]]:
    family = config.family
    m_values = parse_grid(config.m_values, integer=True)
    if family == "single":
        grids = [m_values]
    elif family == "fock":
        grids = [m_values, parse_grid(config.occupation_values, integer=True)]
    elif family == "modes":
        grids = [m_values, parse_grid(config.n_values, integer=True)]
    else:
        grids = [m_values, parse_grid(config.amp_values)]
    names = SCAN_PARAMETERS[family]
    return [dict(zip(names, combo)) for combo in itertools.product(*grids)]


def _scan_row(config: RunConfig, point: Dict[str, Any]) -> Dict[str, Any]:
    family = config.family
    row: Dict[str, Any] = dict(point)
    try:
        overrides = {key: point[key] for key in ("m", "occupation", "n", "amplitude") if key in point}
        point_config = config.model_copy(update=overrides)
        measures = _with_bits(closed_form_measures(point_config, family), config.bits)
        row.update(measures)
        row["error"] = ""
    except QuasibosonError as e:
        logger.error(f"Scan point {point} failed: {e}", exc_info=True)
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def cmd_scan(config: RunConfig) -> Tuple[List[Dict[str, Any]], bool]:
    """One row per grid point in grid order; failures fill the error column."""
    points = _scan_points(config)
    workers = int(os.getenv("QUASIBOSON_SCAN_WORKERS", DEFAULT_SCAN_WORKERS))
    logger.info(f"Scanning {len(points)} {config.family} points with {workers} workers")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda point: _scan_row(config, point), points))
    return rows, all(not row["error"] for row in rows)


def scan_columns(config: RunConfig) -> List[str]:
    columns = SCAN_PARAMETERS[config.family] + MEASURE_COLUMNS[config.family]
    if config.bits:
        columns.append("S_bits")
    return columns + ["error"]


def _flatten(payload: Payload, prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(value)
    return str(value)


def render_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


def render_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    cells = [[_cell(row.get(column)) for column in columns] for row in rows]
    widths = [max([len(column)] + [len(line[i]) for line in cells]) for i, column in enumerate(columns)]
    lines = ["  ".join(column.ljust(width) for column, width in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * width for width in widths))
    lines.extend("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip() for line in cells)
    return "\n".join(lines) + "\n"


def render(result: Any, config: RunConfig) -> str:
    """Serialize a command result in the requested format."""
    if config.command == "scan":
        rows, columns = result, scan_columns(config)
    else:
        flat = _flatten(result)
        rows, columns = [flat], sorted(flat)
    if config.output_format == "json":
        return dump_json(result)
    if config.output_format == "csv":
        return render_csv(rows, columns)
    return render_table(rows, columns)


def _write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


COMMANDS: Dict[str, Callable[[RunConfig], Tuple[Any, bool]]] = {
    "verify": cmd_verify,
    "single": cmd_measures,
    "fock": cmd_measures,
    "modes": cmd_measures,
    "coherent": cmd_measures,
    "state": cmd_measures,
    "scan": cmd_scan,
    "oracle": cmd_oracle,
}


def _epsilon(value: str) -> int:
    try:
        return parse_epsilon(value)
    except ParameterError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=_epsilon, help="+1 (fermionic) or -1 (bosonic) constituents")
    common.add_argument("--tolerance", type=float, default=1e-10, help="Pass threshold for residuals")
    common.add_argument("--oracle-tolerance", type=float, default=1e-8, help="Allowed closed-form vs oracle delta")
    common.add_argument(
        "--format", dest="output_format", choices=["json", "csv", "table"], help="Default: csv for scan, json otherwise"
    )
    common.add_argument("--output", help="Write output here instead of stdout")
    common.add_argument("--bits", action="store_true", help="Also report the entropy in bits")

    dims = argparse.ArgumentParser(add_help=False)
    dims.add_argument("--m", type=int, help="Block size; deformation parameter f = 2/m")
    dims.add_argument("--da", dest="d_a", type=int, help="Number of a-constituent modes")
    dims.add_argument("--db", dest="d_b", type=int, help="Number of b-constituent modes")
    dims.add_argument("--cutoff", type=int, help="Bosonic total-quanta cutoff per species")
    dims.add_argument("--seed", type=int, help="Seed for random U1, U2")
    dims.add_argument("--block-seed", type=int, help="Seed for random per-mode blocks")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--occupation", type=int, help="Quasibosons in the single occupied mode (fock)")
    state.add_argument("--n", type=int, help="Number of singly occupied modes (modes)")
    state.add_argument("--amp", dest="amplitude", type=float, default=0.0, help="Coherent amplitude modulus")
    state.add_argument("--phase", type=float, default=0.0, help="Coherent amplitude phase in radians")
    state.add_argument("--file", dest="wavefunction_file", help="Wavefunction JSON (state)")
    state.add_argument("--renormalize", action="store_true", help="Normalize the wavefunction instead of rejecting it")

    parser = argparse.ArgumentParser(
        prog="quasiboson",
        description="Quasibosons as deformed oscillators: realization checks and entanglement measures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", parents=[common, dims], help="Validate a Phi family and the realization")
    verify.add_argument("--modes", dest="n_modes", type=int, default=1, help="Number of quasiboson modes")
    verify.add_argument(
        "--n-max", type=int, help="Highest total degree of the quasiboson span (default 3, capped at d for fermions)"
    )
    verify.add_argument("--phi-file", help="Load the Phi family from JSON")
    verify.add_argument("--dump-family", help="Write the Phi family used to JSON")

    for name, help_text in (
        ("single", "Single-quasiboson measures"),
        ("fock", "Fock state of one mode"),
        ("modes", "Quasibosons in distinct modes"),
        ("coherent", "Single-mode coherent state"),
        ("state", "General wavefunction from a file"),
    ):
        command = sub.add_parser(name, parents=[common, dims, state], help=help_text)
        command.add_argument("--with-oracle", action="store_true", help="Cross-check by explicit construction")

    oracle = sub.add_parser("oracle", parents=[common, dims, state], help="Closed form vs explicit construction")
    oracle.add_argument("--family", required=True, choices=["single", "fock", "modes", "coherent", "state"])

    scan = sub.add_parser("scan", parents=[common], help="Closed-form measures over a parameter grid")
    scan.add_argument("--family", required=True, choices=["single", "fock", "modes", "coherent"])
    scan.add_argument("--m-values", default="", help='"a,b,c" or inclusive "start:stop:step"')
    scan.add_argument("--occupation-values", default="")
    scan.add_argument("--n-values", default="")
    scan.add_argument("--amp-values", default="")
    scan.add_argument("--phase", type=float, default=0.0)
    scan.add_argument("--seed", type=int)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {key: value for key, value in vars(args).items() if key in RunConfig.model_fields}
    if fields.get("output_format") is None:
        fields["output_format"] = "csv" if args.command == "scan" else "json"
    return RunConfig.model_validate(fields)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    setup_logger(log_level=os.getenv("LOG_LEVEL", "INFO"), run_id=uuid.uuid4().hex[:8])
    try:
        config = _config_from_args(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(f"Running {config.command}")
    try:
        result, passed = COMMANDS[config.command](config)
    except ParameterError as e:
        logger.error(f"Parameter error: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationFailure, ConvergenceError) as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED

    text = render(result, config)
    if config.output:
        _write(config.output, text)
    else:
        sys.stdout.write(text)

    if not passed:
        logger.warning(f"{config.command} finished with failures")
        return EXIT_FAILED
    return EXIT_OK

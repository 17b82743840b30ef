"""Input parsing and serialization helpers."""

import json
import re
from fractions import Fraction
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from src.errors import ParameterError

_RANGE_PATTERN = re.compile(r'^\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*$')


def parse_epsilon(value: Union[str, int]) -> int:
    """
    Parse a statistics sign.

    Args:
        value: "+1", "1", "-1", "fermionic" or "bosonic"

    Returns:
        +1 for fermionic constituents, -1 for bosonic ones
    """
    text = str(value).strip().lower()
    if text in ("+1", "1", "fermionic", "fermion"):
        return 1
    if text in ("-1", "bosonic", "boson"):
        return -1
    raise ParameterError(f"epsilon must be +1 or -1, got {value!r}")


def parse_grid(text: str, integer: bool = False) -> List[Union[int, float]]:
    """
    Parse a scan grid.

    Accepts a comma separated list ("1,2,5") or an inclusive range
    "start:stop:step". An empty string yields an empty grid.

    Args:
        text: Grid specification
        integer: Cast values to int

    Returns:
        Grid values in the order given
    """
    if text is None or not text.strip():
        return []

    match = _RANGE_PATTERN.match(text)
    if match:
        start, stop, step = (Fraction(g) for g in match.groups())
        if step <= 0:
            raise ParameterError(f"grid step must be positive: {text!r}")
        values: List[Fraction] = []
        current = start
        while current <= stop:
            values.append(current)
            current += step
    else:
        try:
            values = [Fraction(item.strip()) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise ParameterError(f"malformed grid {text!r}: {e}") from e

    if integer:
        if any(v.denominator != 1 for v in values):
            raise ParameterError(f"grid {text!r} must contain integers")
        return [int(v) for v in values]
    return [float(v) for v in values]


def format_float(value: float) -> str:
    """Format a float with 17 significant digits for byte-stable CSV output."""
    return format(float(value), ".17g")


def encode_complex(value: complex) -> Dict[str, float]:
    """Encode a complex number as {"re", "im"}."""
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def decode_complex(data: Dict[str, float]) -> complex:
    """Decode {"re", "im"} into a complex number."""
    return complex(float(data.get("re", 0.0)), float(data.get("im", 0.0)))


def encode_matrix(matrix: np.ndarray) -> List[List[Dict[str, float]]]:
    """Encode a complex matrix as nested lists of {"re", "im"} pairs."""
    return [[encode_complex(x) for x in row] for row in np.asarray(matrix)]


def decode_matrix(rows: Sequence[Sequence[Dict[str, float]]]) -> np.ndarray:
    """Decode nested {"re", "im"} pairs into a complex matrix."""
    if not rows:
        raise ParameterError("matrix must have at least one row")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise ParameterError("matrix rows have unequal lengths")
    return np.array([[decode_complex(x) for x in row] for row in rows], dtype=complex)


def dump_json(payload: Any) -> str:
    """Serialize a payload deterministically."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"

"""Power-series evaluators for the modified Bessel function and 0F3."""

import math
from typing import Callable, Tuple

from src.errors import ConvergenceError, ParameterError
from src.logger import get_logger

logger = get_logger()

RELATIVE_STOP = 1e-16
CONSECUTIVE_SMALL_TERMS = 3
MAX_TERMS = 10_000


def sum_series(first_term: float, ratio: Callable[[int], float], name: str = "series") -> Tuple[float, int]:
    """
    Sum t_0 + t_1 + ... with t_{n+1} = ratio(n) * t_n.

    Stops once |t_n| <= 1e-16 |partial sum| for three consecutive terms.

    Args:
        first_term: t_0
        ratio: Term ratio t_{n+1} / t_n as a function of n
        name: Series name for log and error messages

    Returns:
        (sum, number of terms used)
    """
    total = first_term
    term = first_term
    small = 0
    for n in range(MAX_TERMS):
        if total == 0.0 and term == 0.0:
            return 0.0, n + 1
        term = term * ratio(n)
        total += term
        if abs(term) <= RELATIVE_STOP * abs(total):
            small += 1
            if small >= CONSECUTIVE_SMALL_TERMS:
                logger.debug(f"{name} converged after {n + 2} terms")
                return total, n + 2
        else:
            small = 0
    raise ConvergenceError(f"{name} did not converge within {MAX_TERMS} terms")


def sum_terms(term: Callable[[int], float], name: str = "series") -> Tuple[float, int]:
    """Sum term(0) + term(1) + ... under the same stopping rule as ``sum_series``."""
    total = 0.0
    small = 0
    for n in range(MAX_TERMS):
        value = term(n)
        total += value
        if n > 0 and abs(value) <= RELATIVE_STOP * abs(total):
            small += 1
            if small >= CONSECUTIVE_SMALL_TERMS:
                logger.debug(f"{name} converged after {n + 1} terms")
                return total, n + 1
        else:
            small = 0
    raise ConvergenceError(f"{name} did not converge within {MAX_TERMS} terms")


def bessel_i(order: int, z: float) -> float:
    """
    Modified Bessel function I_order(z) = sum_j (z/2)^(order+2j) / (j! (j+order)!).

    Args:
        order: Nonnegative integer order
        z: Finite argument >= 0

    Returns:
        I_order(z)
    """
    if order < 0 or int(order) != order:
        raise ParameterError(f"Bessel order must be a nonnegative integer, got {order}")
    if not math.isfinite(z) or z < 0:
        raise ParameterError(f"Bessel argument must be finite and nonnegative, got {z}")
    if z == 0.0:
        return 1.0 if order == 0 else 0.0

    half = z / 2.0
    first = math.exp(order * math.log(half) - math.lgamma(order + 1))
    quarter = half * half
    value, _ = sum_series(first, lambda j: quarter / ((j + 1) * (j + 1 + order)), f"I_{order}({z})")
    return value


def hyper_0f3(b1: float, b2: float, b3: float, z: float) -> float:
    """Generalized hypergeometric 0F3(;b1,b2,b3;z) = sum_n z^n / ((b1)_n (b2)_n (b3)_n n!)."""
    for b in (b1, b2, b3):
        if b <= 0 and float(b).is_integer():
            raise ParameterError(f"0F3 parameter {b} is a nonpositive integer")
    if not math.isfinite(z):
        raise ParameterError(f"0F3 argument must be finite, got {z}")
    value, _ = sum_series(
        1.0,
        lambda n: z / ((b1 + n) * (b2 + n) * (b3 + n) * (n + 1)),
        f"0F3({b1},{b2},{b3};{z})",
    )
    return value

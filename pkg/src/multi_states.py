"""Entanglement of multi-quasiboson states between the a and b constituents.

A state sum Psi({m_gamma}) prod (A_gamma^dagger)^{m_gamma} |0> splits into
Schmidt blocks: every configuration contributes prod N_m^{m_gamma} equal
coefficients with

    Lambda^2 = |Psi|^2 m^(-sum m_gamma) prod (m_gamma!)^2

so K and S follow from the configuration list without building the state.
``oracle_measures`` builds it anyway and takes the SVD.
"""

import cmath
import math
from dataclasses import dataclass
from math import comb, lgamma, log
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.deformed_algebra import (
    DeformationSpec,
    build_system,
    monomial_vector,
    phi_factorial,
)
from src.entanglement import measure_state
from src.errors import ConvergenceError, NilpotencyError, NormalizationError, ParameterError
from src.fock_core import StateVector
from src.logger import get_logger
from src.models import AmplitudeEntry, StateMeasures, WavefunctionFile
from src.phi_family import UnitarySpec, build_phi_family
from src.special_functions import bessel_i, hyper_0f3, sum_series, sum_terms

__all__ = [
    "OccupationConfig",
    "Wavefunction",
    "CoherentParams",
    "multiplicity",
    "lambda_coefficients",
    "general_state_measures",
    "fock_state_measures",
    "distinct_modes_measures",
    "bessel_i",
    "hyper_0f3",
    "coherent_normalization",
    "coherent_K",
    "coherent_entropy",
    "coherent_measures",
    "coherent_normalization_expansion",
    "coherent_K_expansion",
    "coherent_entropy_expansion",
    "fock_wavefunction",
    "distinct_modes_wavefunction",
    "coherent_wavefunction",
    "superposition",
    "oracle_measures",
]

logger = get_logger()

NORMALIZATION_TOLERANCE = 1e-8
ROUTE_TOLERANCE = 1e-10
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class OccupationConfig:
    """Occupations of the quasiboson modes; zero occupations are not stored."""
    occupations: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        cleaned = {}
        for label, count in self.occupations:
            count = int(count)
            if count < 0:
                raise ParameterError(f"occupation of mode {label} is negative: {count}")
            if count:
                cleaned[str(label)] = cleaned.get(str(label), 0) + count
        object.__setattr__(self, "occupations", tuple(sorted(cleaned.items())))

    @classmethod
    def of(cls, mapping: Optional[Mapping[Any, int]] = None) -> "OccupationConfig":
        return cls(tuple((str(k), v) for k, v in (mapping or {}).items()))

    def get(self, label: Any) -> int:
        return dict(self.occupations).get(str(label), 0)

    @property
    def total(self) -> int:
        return sum(count for _, count in self.occupations)

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(count for _, count in self.occupations)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.occupations)


@dataclass(frozen=True)
class Wavefunction:
    """
    Amplitudes Psi over occupation configurations of a fixed mode set.

    Normalized means sum |Psi|^2 prod phi(m_gamma)! = 1.
    """
    spec: DeformationSpec
    modes: Tuple[str, ...]
    amplitudes: Tuple[Tuple[OccupationConfig, complex], ...]

    def __post_init__(self):
        modes = tuple(str(label) for label in self.modes)
        if not modes:
            raise ParameterError("a wavefunction needs at least one mode")
        if len(set(modes)) != len(modes):
            raise ParameterError(f"mode labels must be unique: {modes}")
        object.__setattr__(self, "modes", modes)

        merged: Dict[OccupationConfig, complex] = {}
        for config, value in self.amplitudes:
            unknown = set(config.as_dict()) - set(modes)
            if unknown:
                raise ParameterError(f"configuration uses undeclared modes {sorted(unknown)}")
            if self.spec.epsilon == 1 and any(count > self.spec.m for count in config.counts):
                raise NilpotencyError(
                    f"occupation above m = {self.spec.m} vanishes for fermionic constituents: {config.as_dict()}"
                )
            merged[config] = merged.get(config, 0j) + complex(value)
        object.__setattr__(self, "amplitudes", tuple(merged.items()))

    @classmethod
    def from_mapping(
        cls,
        spec: DeformationSpec,
        modes: Sequence[Any],
        amplitudes: Sequence[Tuple[Mapping[Any, int], complex]]
    ) -> "Wavefunction":
        return cls(spec, tuple(modes), tuple((OccupationConfig.of(c), v) for c, v in amplitudes))

    @classmethod
    def from_file(cls, data: Union[WavefunctionFile, Dict[str, Any]]) -> "Wavefunction":
        if not isinstance(data, WavefunctionFile):
            data = WavefunctionFile.model_validate(data)
        return cls(
            DeformationSpec(epsilon=data.epsilon, m=data.m),
            tuple(data.modes),
            tuple((OccupationConfig.of(e.config), complex(e.re, e.im)) for e in data.amplitudes),
        )

    def to_file(self) -> WavefunctionFile:
        return WavefunctionFile(
            epsilon=self.spec.epsilon,
            m=self.spec.m,
            modes=list(self.modes),
            amplitudes=[
                AmplitudeEntry(config=config.as_dict(), re=value.real, im=value.imag)
                for config, value in self.amplitudes
            ],
        )

    def norm_squared(self) -> float:
        total = 0.0
        for config, value in self.amplitudes:
            weight = math.prod(float(phi_factorial(k, self.spec)) for k in config.counts)
            total += abs(value) ** 2 * weight
        return total

    def renormalized(self) -> "Wavefunction":
        norm = self.norm_squared()
        if norm == 0.0:
            raise NormalizationError("wavefunction has zero norm")
        scale = 1.0 / math.sqrt(norm)
        return Wavefunction(self.spec, self.modes, tuple((c, v * scale) for c, v in self.amplitudes))

    @property
    def max_total(self) -> int:
        return max((config.total for config, _ in self.amplitudes), default=0)


def multiplicity(m: int, occupation: int, epsilon: int) -> int:
    """
    Number of equal Schmidt coefficients contributed by one occupied mode.

    C(m, k) for fermionic constituents and C(m+k-1, m-1) for bosonic ones.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if occupation < 0:
        raise ParameterError(f"occupation must be >= 0, got {occupation}")
    if epsilon == 1:
        if occupation > m:
            raise NilpotencyError(f"occupation {occupation} exceeds m = {m} for fermionic constituents")
        return comb(m, occupation)
    if epsilon == -1:
        return comb(m + occupation - 1, m - 1)
    raise ParameterError(f"epsilon must be +1 or -1, got {epsilon}")


def _log_lambda_sq(value: complex, counts: Sequence[int], m: int) -> float:
    return 2.0 * log(abs(value)) - sum(counts) * log(m) + 2.0 * sum(lgamma(k + 1) for k in counts)


def lambda_coefficients(psi: Wavefunction) -> List[Tuple[OccupationConfig, float, int]]:
    """
    Extended Schmidt coefficients.

    Returns:
        (config, Lambda, multiplicity) per nonzero configuration, so that
        sum multiplicity * Lambda^2 equals the wavefunction norm
    """
    m = psi.spec.m
    rows = []
    for config, value in psi.amplitudes:
        if value == 0:
            continue
        count = math.prod(multiplicity(m, k, psi.spec.epsilon) for k in config.counts)
        rows.append((config, math.exp(0.5 * _log_lambda_sq(value, config.counts, m)), count))
    return rows


def general_state_measures(psi: Wavefunction, tolerance: float = NORMALIZATION_TOLERANCE) -> StateMeasures:
    """
    K and S of a normalized multi-quasiboson wavefunction.

    Args:
        psi: Wavefunction, normalized within ``tolerance``
        tolerance: Allowed normalization defect

    Returns:
        StateMeasures
    """
    norm = psi.norm_squared()
    if abs(norm - 1.0) > tolerance:
        raise NormalizationError(f"wavefunction norm is {norm:.12g}, expected 1")

    m = psi.spec.m
    purity = 0.0
    entropy = 0.0
    for config, value in psi.amplitudes:
        if value == 0:
            continue
        count = math.prod(multiplicity(m, k, psi.spec.epsilon) for k in config.counts)
        log_sq = _log_lambda_sq(value, config.counts, m)
        weight = math.exp(log_sq)
        purity += count * weight * weight
        entropy -= count * weight * log_sq

    logger.debug(f"General state measures over {len(psi.amplitudes)} configurations: P={purity:.6g}")
    return StateMeasures(schmidt_number=1.0 / purity, entropy=entropy)


def fock_state_measures(m: int, occupation: int, epsilon: int) -> StateMeasures:
    """K = N_m^{m_alpha} and S = ln K for m_alpha quasibosons in one mode."""
    count = multiplicity(m, occupation, epsilon)
    return StateMeasures(schmidt_number=float(count), entropy=log(count))


def distinct_modes_measures(m: int, n: int) -> StateMeasures:
    """K = m^n and S = n ln m for n quasibosons in n different modes."""
    if m < 1 or n < 1:
        raise ParameterError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    return StateMeasures(schmidt_number=float(m ** n), entropy=n * log(m))


@dataclass(frozen=True)
class CoherentParams:
    """Single-mode coherent state A|psi> = amplitude |psi>; bosonic constituents only."""
    amplitude: complex
    m: int
    epsilon: int = -1

    def __post_init__(self):
        if self.epsilon != -1:
            raise ParameterError("coherent states exist only for bosonic constituents (epsilon -1)")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not cmath.isfinite(self.amplitude):
            raise ParameterError(f"amplitude must be finite, got {self.amplitude}")

    @classmethod
    def polar(cls, modulus: float, phase: float, m: int) -> "CoherentParams":
        return cls(amplitude=cmath.rect(modulus, phase), m=m)

    @property
    def x(self) -> float:
        """|amplitude|^2."""
        return abs(self.amplitude) ** 2

    @property
    def spec(self) -> DeformationSpec:
        return DeformationSpec(epsilon=-1, m=self.m)


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _normalization_sum(p: CoherentParams) -> Tuple[float, int]:
    """sum |A|^{2n} / phi(n)! by the Bessel route, checked against the direct series."""
    x, m = p.x, p.m
    if x == 0.0:
        return 1.0, 1
    z = 2.0 * math.sqrt(m * x)
    half = z / 2.0
    via_bessel = math.exp(lgamma(m) - (m - 1) * log(half)) * bessel_i(m - 1, z)
    direct, terms = sum_series(1.0, lambda n: x * m / ((n + 1) * (n + m)), "coherent normalization")
    gap = _relative_gap(via_bessel, direct)
    if gap > ROUTE_TOLERANCE:
        raise ConvergenceError(f"coherent normalization routes disagree by {gap:.3e}")
    return via_bessel, terms


def coherent_normalization(p: CoherentParams) -> float:
    """
    C~ = (sum |A|^{2n} / phi(n)!)^{-1/2} = [(m-1)! I_{m-1}(z) / (z/2)^{m-1}]^{-1/2}, z = 2 sqrt(m) |A|.

    Args:
        p: Coherent-state parameters

    Returns:
        C~, with the Bessel and direct-series routes agreeing to 1e-10
    """
    total, _ = _normalization_sum(p)
    return total ** -0.5


def _log_multiplicity(n: int, m: int) -> float:
    """ln C(n+m-1, n)."""
    return lgamma(n + m) - lgamma(n + 1) - lgamma(m)


def coherent_K(p: CoherentParams) -> float:
    """
    K = C~^{-4} / 0F3(m, m, m; |A|^4 m^2).

    The denominator is also summed as sum C(n+m-1, n)^{-3} (|A|^2 m)^{2n} / (n!)^4
    and both routes must agree to 1e-10.
    """
    x, m = p.x, p.m
    if x == 0.0:
        return 1.0
    norm_sum, _ = _normalization_sum(p)
    via_hyper = hyper_0f3(m, m, m, x * x * m * m)
    log_xm = log(x * m)
    direct, _ = sum_terms(
        lambda n: math.exp(-3.0 * _log_multiplicity(n, m) + 2 * n * log_xm - 4.0 * lgamma(n + 1)),
        "coherent Schmidt number",
    )
    gap = _relative_gap(via_hyper, direct)
    if gap > ROUTE_TOLERANCE:
        raise ConvergenceError(f"coherent Schmidt number routes disagree by {gap:.3e}")
    return norm_sum ** 2 / via_hyper


def coherent_entropy(p: CoherentParams) -> float:
    """Entanglement entropy of the coherent state in nats."""
    return _coherent_entropy(p)[0]


def _coherent_entropy(p: CoherentParams) -> Tuple[float, int]:
    x, m = p.x, p.m
    if x == 0.0:
        return 0.0, 1
    log_norm_sq = -log(_normalization_sum(p)[0])
    log_xm = log(x * m)

    def term(n: int) -> float:
        log_mult = _log_multiplicity(n, m)
        # weight of configuration n, spread over C(n+m-1, n) equal Schmidt coefficients
        log_weight = log_norm_sq + n * log_xm - 2.0 * lgamma(n + 1) - log_mult
        return math.exp(log_weight) * (log_mult - log_weight)

    return sum_terms(term, "coherent entropy")


def coherent_measures(p: CoherentParams) -> StateMeasures:
    """K and S of the coherent state, with the number of entropy series terms."""
    entropy, terms = _coherent_entropy(p)
    return StateMeasures(schmidt_number=coherent_K(p), entropy=entropy, series_terms=terms)


def coherent_normalization_expansion(p: CoherentParams) -> float:
    """Small-amplitude form e^{-x/2} (1 + x^2 / (4m)), x = |A|^2; leading order in 1/m."""
    x = p.x
    return math.exp(-x / 2.0) * (1.0 + x * x / (4.0 * p.m))


def coherent_K_expansion(p: CoherentParams) -> float:
    """Small-amplitude form e^{2x} (1 - 2 x^2 / m); leading order in 1/m."""
    x = p.x
    return math.exp(2.0 * x) * (1.0 - 2.0 * x * x / p.m)


def coherent_entropy_expansion(p: CoherentParams) -> float:
    """Small-amplitude form x[1 - (1+x) x / (2m)] ln(m/x) + x[1 + (1 - x/2) x / m]; leading order in 1/m."""
    x, m = p.x, p.m
    if x == 0.0:
        return 0.0
    return x * (1.0 - 0.5 * (1.0 + x) * x / m) * log(m / x) + x * (1.0 + (1.0 - x / 2.0) * x / m)


def fock_wavefunction(m: int, occupation: int, epsilon: int, label: str = "1") -> Wavefunction:
    """Normalized Fock state (A^dagger)^k |0> / sqrt(phi(k)!) of one mode."""
    spec = DeformationSpec(epsilon=epsilon, m=m)
    if epsilon == 1 and occupation > m:
        raise NilpotencyError(f"occupation {occupation} exceeds m = {m} for fermionic constituents")
    weight = float(phi_factorial(occupation, spec))
    return Wavefunction.from_mapping(spec, [label], [({label: occupation}, weight ** -0.5)])


def distinct_modes_wavefunction(m: int, n: int, epsilon: int) -> Wavefunction:
    """A_1^dagger ... A_n^dagger |0> with modes labeled "1".."n"."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    labels = [str(k) for k in range(1, n + 1)]
    return Wavefunction.from_mapping(
        DeformationSpec(epsilon=epsilon, m=m), labels, [({label: 1 for label in labels}, 1.0)]
    )


def coherent_wavefunction(p: CoherentParams, tail: float = TAIL_MASS, label: str = "1") -> Tuple[Wavefunction, int]:
    """
    Coherent state truncated at the smallest n* whose remaining weight is below ``tail``.

    Psi(n) = C~ A^n / phi(n)!; configuration n carries weight C~^2 |A|^{2n} / phi(n)!.

    Returns:
        (wavefunction, n*)
    """
    spec = p.spec
    c_tilde = coherent_normalization(p)
    x, m = p.x, p.m

    weights = [c_tilde ** 2]
    while True:
        n = len(weights) - 1
        nxt = weights[-1] * x * m / ((n + 1) * (n + m))
        weights.append(nxt)
        if nxt < tail * 1e-6 and nxt <= weights[-2]:
            break
        if len(weights) > 10_000:
            raise ConvergenceError("coherent weights did not decay within 10000 terms")

    remaining = 0.0
    n_star = len(weights) - 1
    for n in range(len(weights) - 1, -1, -1):
        if remaining + weights[n] >= tail:
            n_star = n
            break
        remaining += weights[n]
    else:
        n_star = 0

    amplitudes = []
    for n in range(n_star + 1):
        value = c_tilde * p.amplitude ** n / float(phi_factorial(n, spec))
        amplitudes.append(({label: n}, value))
    logger.debug(f"Coherent wavefunction truncated at n* = {n_star} (tail {remaining:.2e})")
    return Wavefunction.from_mapping(spec, [label], amplitudes), n_star


def superposition(
    components: Sequence[Tuple[Mapping[Any, int], complex]],
    spec: DeformationSpec,
    modes: Optional[Sequence[Any]] = None
) -> Wavefunction:
    """
    Normalized superposition of normalized Fock configurations.

    Args:
        components: (config, weight) pairs; each weight multiplies the
            normalized state prod (A^dagger)^{m_gamma} |0> / sqrt(prod phi(m_gamma)!)
        spec: Deformation
        modes: Mode labels; defaults to the sorted labels used by the configs

    Returns:
        Wavefunction normalized to 1
    """
    if not components:
        raise ParameterError("a superposition needs at least one component")
    labels = modes or sorted({str(k) for config, _ in components for k in config})
    amplitudes = []
    for config, weight in components:
        config_norm = math.prod(float(phi_factorial(k, spec)) for k in config.values())
        if config_norm == 0.0:
            raise NilpotencyError(f"configuration {dict(config)} is annihilated")
        amplitudes.append((config, complex(weight) / math.sqrt(config_norm)))
    return Wavefunction.from_mapping(spec, labels, amplitudes).renormalized()


def oracle_measures(
    psi: Wavefunction,
    d_a: Optional[int] = None,
    d_b: Optional[int] = None,
    cutoffs: Optional[Tuple[int, int]] = None,
    seed: Optional[int] = None
) -> StateMeasures:
    """
    K and S from the explicit state vector.

    Builds sum Psi prod (A_gamma^dagger)^{m_gamma} |0> on explicit constituent
    spaces, reshapes it a-versus-b and takes the SVD.

    Args:
        psi: Wavefunction; its mode order fixes the quasiboson labels 1..D
        d_a: a-constituent modes (default D * m)
        d_b: b-constituent modes (default D * m)
        cutoffs: Bosonic total-quanta cutoffs (default: highest total in psi)
        seed: Seed for random unitaries U1, U2 and blocks; identity if None

    Returns:
        StateMeasures with the oracle K and S
    """
    spec = psi.spec
    n_modes = len(psi.modes)
    d_a = d_a or n_modes * spec.m
    d_b = d_b or n_modes * spec.m
    if n_modes * spec.m > min(d_a, d_b):
        raise ParameterError(f"{n_modes} modes of size {spec.m} need at least {n_modes * spec.m} constituent modes")

    needed = psi.max_total
    if spec.epsilon == -1:
        cut_a, cut_b = cutoffs if cutoffs is not None else (needed, needed)
        if min(cut_a, cut_b) < needed:
            raise ParameterError(f"cutoffs {cut_a}, {cut_b} below the {needed} quanta of the state")
    else:
        cut_a = cut_b = None

    unitary = UnitarySpec.seeded(seed) if seed is not None else None
    family = build_phi_family(d_a, d_b, spec.m, n_modes, unitary, unitary, unitary, epsilon=spec.epsilon)
    system = build_system(family, cut_a, cut_b)

    vector = np.zeros(system.product.dim, dtype=complex)
    for config, value in psi.amplitudes:
        degrees = [config.get(label) for label in psi.modes]
        vector += value * monomial_vector(system, degrees)

    report = measure_state(StateVector(system.product, vector))
    logger.info(f"Oracle state on {system.product.dim} amplitudes: rank {report.rank}, K={report.schmidt_number:.10g}")
    return StateMeasures(schmidt_number=report.schmidt_number, entropy=report.entropy)

"""Pydantic models for reports, input files and run configuration."""

import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _check_epsilon(v: Optional[int]) -> Optional[int]:
    if v is not None and v not in (1, -1):
        raise ValueError("epsilon must be +1 (fermionic) or -1 (bosonic)")
    return v


class EntanglementReport(BaseModel):
    """Entanglement measures of one bipartite pure state."""
    model_config = ConfigDict(populate_by_name=True)

    rank: int = Field(..., ge=0, description="Number of Schmidt coefficients above the rank threshold")
    schmidt_number: float = Field(..., serialization_alias="K", description="K = 1 / sum(lambda^4)")
    purity: float = Field(..., serialization_alias="P", description="P = Tr(rho_a^2) = 1 / K")
    entropy: float = Field(..., serialization_alias="S_nats", description="Entanglement entropy in nats")
    concurrence: float = Field(..., serialization_alias="C", description="Concurrence with the rank as prefactor")
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @property
    def entropy_bits(self) -> float:
        return self.entropy / math.log(2)

    def to_dict(self, bits: bool = False) -> Dict[str, Any]:
        """JSON payload; adds S_bits when requested."""
        payload = self.model_dump(by_alias=True)
        if bits:
            payload["S_bits"] = self.entropy_bits
        return payload


class DensityMatrixReport(BaseModel):
    """Comparison of reduced-density-matrix and spectrum routes."""
    schmidt_number_a: float
    schmidt_number_b: float
    entropy_a: float
    entropy_b: float
    purity_a: float
    purity_b: float
    schmidt_number_spectrum: float
    entropy_spectrum: float
    spectrum_residual: float = Field(..., description="max |eig(rho_a) - lambda^2| over the Schmidt rank")
    uniform_mixture_residual: float = Field(..., description="max |eig(rho_a) - 1/rank| over the Schmidt rank")
    max_deviation: float
    tolerance: float
    renormalized: bool = False

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance and self.spectrum_residual <= self.tolerance


class ValidationReport(BaseModel):
    """Residuals of the matrix conditions a PhiFamily must satisfy."""
    epsilon: int
    m: int
    n_modes: int
    d_a: int
    d_b: int
    orthonormality_residual: float
    cross_mode_residual: float
    cubic_residual: float
    f_hat: List[float]
    f_expected: float
    f_deviation: float
    tolerance: float
    checks: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> List[str]:
        return sorted(name for name, ok in self.checks.items() if not ok)


class RealizationReport(BaseModel):
    """Residuals of the deformed-oscillator relations on the quasiboson span."""
    epsilon: int
    m: int
    n_modes: int
    n_max: int
    span_dimension: int
    cross_mode_residual: float
    ladder_residual: float
    structure_function_residual: float
    deviation_identity_residual: float
    vacuum_norm_residual: float
    nilpotency_orders: List[Optional[int]] = Field(
        ..., description="Smallest vanishing power per mode; null means infinite (no vanishing power up to the cutoff)"
    )
    expected_nilpotency: Optional[int] = Field(..., description="m + 1 for fermionic constituents; null means infinite")
    tolerance: float
    checks: Dict[str, bool]
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> List[str]:
        return sorted(name for name, ok in self.checks.items() if not ok)


class StateMeasures(BaseModel):
    """Schmidt number and entropy of a multi-quasiboson state."""
    model_config = ConfigDict(populate_by_name=True)

    schmidt_number: float = Field(..., serialization_alias="K")
    entropy: float = Field(..., serialization_alias="S_nats")
    series_terms: Optional[int] = Field(None, description="Terms summed by a series evaluation")
    truncation: Optional[int] = Field(None, description="Highest occupation kept in a truncated wavefunction")

    @property
    def entropy_bits(self) -> float:
        return self.entropy / math.log(2)

    def to_dict(self, bits: bool = False) -> Dict[str, Any]:
        payload = self.model_dump(by_alias=True, exclude_none=True)
        if bits:
            payload["S_bits"] = self.entropy_bits
        return payload


class AmplitudeEntry(BaseModel):
    """One configuration of a wavefunction file."""
    config: Dict[str, int] = Field(default_factory=dict, description="mode label -> occupation; absent modes are empty")
    re: float = 0.0
    im: float = 0.0

    @field_validator('config')
    @classmethod
    def validate_occupations(cls, v: Dict[str, int]) -> Dict[str, int]:
        if any(n < 0 for n in v.values()):
            raise ValueError("occupations must be nonnegative")
        return v


class WavefunctionFile(BaseModel):
    """On-disk wavefunction: amplitudes over quasiboson occupation configurations."""
    epsilon: int
    m: int = Field(..., ge=1)
    modes: List[str] = Field(..., min_length=1)
    amplitudes: List[AmplitudeEntry]

    @field_validator('epsilon')
    @classmethod
    def validate_epsilon(cls, v: Optional[int]) -> Optional[int]:
        return _check_epsilon(v)

    @field_validator('modes', mode='before')
    @classmethod
    def stringify_modes(cls, v: List[Any]) -> List[str]:
        return [str(label) for label in v]

    @model_validator(mode='after')
    def validate_labels(self) -> "WavefunctionFile":
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("mode labels must be unique")
        known = set(self.modes)
        for entry in self.amplitudes:
            unknown = set(entry.config) - known
            if unknown:
                raise ValueError(f"configuration uses undeclared modes {sorted(unknown)}")
        return self


class PhiFamilyFile(BaseModel):
    """On-disk PhiFamily: deformation data, matrices and how they were built."""
    epsilon: int
    m: int = Field(..., ge=1)
    d_a: int = Field(..., ge=1)
    d_b: int = Field(..., ge=1)
    matrices: List[List[List[Dict[str, float]]]] = Field(..., min_length=1)
    block_starts: List[Optional[int]] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @field_validator('epsilon')
    @classmethod
    def validate_epsilon(cls, v: Optional[int]) -> Optional[int]:
        return _check_epsilon(v)

    @model_validator(mode='after')
    def validate_shapes(self) -> "PhiFamilyFile":
        for matrix in self.matrices:
            if len(matrix) != self.d_a or any(len(row) != self.d_b for row in matrix):
                raise ValueError(f"every matrix must be {self.d_a}x{self.d_b}")
        return self


Command = Literal["verify", "single", "fock", "modes", "coherent", "state", "scan", "oracle"]
Family = Literal["single", "fock", "modes", "coherent", "state"]


class RunConfig(BaseModel):
    """Validated command-line configuration."""
    command: Command
    epsilon: Optional[int] = None
    m: Optional[int] = Field(None, ge=1)
    d_a: Optional[int] = Field(None, ge=1)
    d_b: Optional[int] = Field(None, ge=1)
    n_modes: int = Field(1, ge=1)
    cutoff: Optional[int] = Field(None, ge=0)
    n_max: Optional[int] = Field(None, ge=0)
    seed: Optional[int] = None
    block_seed: Optional[int] = None
    occupation: Optional[int] = Field(None, ge=0)
    n: Optional[int] = Field(None, ge=1)
    amplitude: float = Field(0.0, ge=0.0)
    phase: float = 0.0
    family: Optional[Family] = None
    m_values: str = ""
    occupation_values: str = ""
    n_values: str = ""
    amp_values: str = ""
    phi_file: Optional[str] = None
    wavefunction_file: Optional[str] = None
    dump_family: Optional[str] = None
    renormalize: bool = False
    with_oracle: bool = False
    bits: bool = False
    tolerance: float = Field(1e-10, gt=0.0)
    oracle_tolerance: float = Field(1e-8, gt=0.0)
    output_format: Literal["json", "csv", "table"] = "json"
    output: Optional[str] = None

    @field_validator('epsilon')
    @classmethod
    def validate_epsilon(cls, v: Optional[int]) -> Optional[int]:
        return _check_epsilon(v)

    @model_validator(mode='after')
    def validate_command_fields(self) -> "RunConfig":
        target = self.family if self.command in ("oracle", "scan") else self.command
        if self.command in ("scan", "oracle") and self.family is None:
            raise ValueError(f"{self.command} needs --family")
        if self.command == "scan" and self.family == "state":
            raise ValueError("scan does not support the state family")

        if self.epsilon is None:
            self.epsilon = -1 if target == "coherent" else 1
        if target == "coherent" and self.epsilon != -1:
            raise ValueError("coherent states exist only for bosonic constituents (epsilon -1)")

        if self.command == "scan":
            return self
        if self.command == "verify" and self.phi_file is None and self.m is None:
            raise ValueError("verify needs --m or --phi-file")
        if target in ("single", "fock", "modes", "coherent") and self.m is None:
            raise ValueError(f"{target} needs --m")
        if target == "fock" and self.occupation is None:
            raise ValueError("fock needs --occupation")
        if target == "modes" and self.n is None:
            raise ValueError("modes needs --n")
        if target == "state" and self.wavefunction_file is None:
            raise ValueError("state needs --file")
        return self

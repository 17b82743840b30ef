"""Phi matrix families realizing quasibosons as deformed oscillators.

Every family is built in block-diagonal form

    Phi_alpha = U1 . diag{0..0, U_alpha(m) / sqrt(m), 0..0} . U2^dagger

with the m x m block of mode alpha (1-based) at offset (alpha - 1) * m, so the
blocks of distinct modes never intersect.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.entanglement import SchmidtSpectrum
from src.errors import ParameterError, UnitarityError
from src.logger import get_logger
from src.models import PhiFamilyFile, ValidationReport
from src.utils import decode_matrix, encode_matrix

logger = get_logger()

CONSTRUCTION_TOLERANCE = 1e-12
VALIDATION_TOLERANCE = 1e-10
UNITARITY_TOLERANCE = 1e-10

# Seed streams keep U1, U2 and the per-mode blocks independent for one seed.
U1_STREAM = 0
U2_STREAM = 1
BLOCK_STREAM_OFFSET = 2


def haar_unitary(dim: int, seed: int, stream: int = 0) -> np.ndarray:
    """
    Haar-random unitary from the QR decomposition of a seeded complex Gaussian matrix.

    The diagonal of R is made real and positive so the result is unique.

    Args:
        dim: Matrix size
        seed: Integer seed
        stream: Independent substream for the same seed

    Returns:
        dim x dim unitary matrix
    """
    rng = np.random.default_rng([seed, stream])
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[np.newaxis, :]


def unitarity_residual(matrix: np.ndarray) -> float:
    """max |U^dagger U - Id|."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return float("inf")
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))


@dataclass(frozen=True)
class UnitarySpec:
    """How to obtain a unitary: identity, seeded Haar-random or explicit."""
    kind: str = "identity"
    seed: Optional[int] = None
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("identity", "seeded-random", "explicit"):
            raise ParameterError(f"unknown unitary spec {self.kind!r}")
        if self.kind == "seeded-random" and self.seed is None:
            raise ParameterError("seeded-random unitaries need a seed")
        if self.seed is not None and self.seed < 0:
            raise ParameterError(f"seeds must be nonnegative, got {self.seed}")
        if self.kind == "explicit" and self.matrix is None:
            raise ParameterError("explicit unitary spec needs a matrix")

    @classmethod
    def identity(cls) -> "UnitarySpec":
        return cls("identity")

    @classmethod
    def seeded(cls, seed: int) -> "UnitarySpec":
        return cls("seeded-random", seed=int(seed))

    @classmethod
    def explicit(cls, matrix: np.ndarray) -> "UnitarySpec":
        return cls("explicit", matrix=np.asarray(matrix, dtype=complex))

    def resolve(self, dim: int, stream: int = 0) -> np.ndarray:
        """Materialize the unitary for a given size."""
        if self.kind == "identity":
            return np.eye(dim, dtype=complex)
        if self.kind == "seeded-random":
            return haar_unitary(dim, self.seed, stream)

        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (dim, dim):
            raise ParameterError(f"explicit unitary has shape {matrix.shape}, expected {(dim, dim)}")
        residual = unitarity_residual(matrix)
        if residual > UNITARITY_TOLERANCE:
            raise UnitarityError(f"explicit matrix deviates from unitarity by {residual:.3e}")
        return matrix

    def describe(self) -> Dict[str, Any]:
        if self.kind == "explicit":
            return {"kind": self.kind, "matrix": encode_matrix(self.matrix)}
        return {"kind": self.kind, "seed": self.seed}


@dataclass(frozen=True)
class PhiMatrix:
    """Coefficient matrix Phi_alpha^{mu nu} of one quasiboson mode."""
    label: int
    entries: np.ndarray
    block_start: Optional[int] = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2:
            raise ParameterError(f"Phi must be a matrix, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def d_a(self) -> int:
        return self.entries.shape[0]

    @property
    def d_b(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class PhiFamily:
    """Matrices Phi_alpha plus the deformation data (epsilon, m, f = 2/m)."""
    matrices: Tuple[PhiMatrix, ...]
    epsilon: int
    m: int
    u1: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    u2: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    blocks: Tuple[np.ndarray, ...] = field(default=(), compare=False, repr=False)
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ParameterError(f"epsilon must be +1 or -1, got {self.epsilon}")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")
        if not self.matrices:
            raise ParameterError("a family needs at least one matrix")
        shapes = {phi.entries.shape for phi in self.matrices}
        if len(shapes) != 1:
            raise ParameterError(f"family matrices have different shapes: {sorted(shapes)}")

    @classmethod
    def from_matrices(
        cls,
        matrices: Sequence[np.ndarray],
        epsilon: int,
        m: int,
        provenance: Optional[Dict[str, Any]] = None
    ) -> "PhiFamily":
        """Wrap hand-built or loaded matrices; no construction guarantees apply."""
        phis = tuple(PhiMatrix(label=i + 1, entries=matrix) for i, matrix in enumerate(matrices))
        return cls(matrices=phis, epsilon=epsilon, m=m, provenance=dict(provenance or {"kind": "explicit"}))

    @property
    def f(self) -> Fraction:
        return Fraction(2, self.m)

    @property
    def n_modes(self) -> int:
        return len(self.matrices)

    @property
    def d_a(self) -> int:
        return self.matrices[0].d_a

    @property
    def d_b(self) -> int:
        return self.matrices[0].d_b

    def phi(self, label: int) -> PhiMatrix:
        """Matrix of mode ``label`` (1-based)."""
        if not 1 <= label <= self.n_modes:
            raise ParameterError(f"mode label {label} out of range 1..{self.n_modes}")
        return self.matrices[label - 1]

    def to_file(self) -> PhiFamilyFile:
        return PhiFamilyFile(
            epsilon=self.epsilon,
            m=self.m,
            d_a=self.d_a,
            d_b=self.d_b,
            matrices=[encode_matrix(phi.entries) for phi in self.matrices],
            block_starts=[phi.block_start for phi in self.matrices],
            provenance=self.provenance,
        )

    @classmethod
    def from_file(cls, data: Union[PhiFamilyFile, Dict[str, Any]]) -> "PhiFamily":
        if not isinstance(data, PhiFamilyFile):
            data = PhiFamilyFile.model_validate(data)
        starts = list(data.block_starts) + [None] * (len(data.matrices) - len(data.block_starts))
        phis = tuple(
            PhiMatrix(label=i + 1, entries=decode_matrix(rows), block_start=start)
            for i, (rows, start) in enumerate(zip(data.matrices, starts))
        )
        return cls(matrices=phis, epsilon=data.epsilon, m=data.m, provenance=dict(data.provenance))


def build_phi_family(
    d_a: int,
    d_b: int,
    m: int,
    n_modes: int,
    u1_spec: Optional[UnitarySpec] = None,
    u2_spec: Optional[UnitarySpec] = None,
    block_spec: Optional[UnitarySpec] = None,
    epsilon: int = 1
) -> PhiFamily:
    """
    Build the block-diagonal Phi family.

    Args:
        d_a: Number of a-constituent modes
        d_b: Number of b-constituent modes
        m: Block size; the deformation parameter is f = 2/m
        n_modes: Number of quasiboson modes
        u1_spec: Unitary acting on the a index (default identity)
        u2_spec: Unitary acting on the b index (default identity)
        block_spec: Unitary used for each m x m block (default identity)
        epsilon: +1 for fermionic, -1 for bosonic constituents

    Returns:
        PhiFamily whose matrices satisfy orthonormality and the cubic and
        cross-mode conditions to construction accuracy
    """
    if min(d_a, d_b, m, n_modes) < 1:
        raise ParameterError(f"dimensions must be positive: d_a={d_a}, d_b={d_b}, m={m}, n_modes={n_modes}")
    if n_modes * m > min(d_a, d_b):
        raise ParameterError(
            f"{n_modes} blocks of size {m} do not fit into min(d_a, d_b) = {min(d_a, d_b)}"
        )

    u1_spec = u1_spec or UnitarySpec.identity()
    u2_spec = u2_spec or UnitarySpec.identity()
    block_spec = block_spec or UnitarySpec.identity()

    u1 = u1_spec.resolve(d_a, U1_STREAM)
    u2 = u2_spec.resolve(d_b, U2_STREAM)
    scale = 1.0 / np.sqrt(m)

    phis: List[PhiMatrix] = []
    blocks: List[np.ndarray] = []
    for alpha in range(1, n_modes + 1):
        block = block_spec.resolve(m, BLOCK_STREAM_OFFSET + alpha)
        start = (alpha - 1) * m
        core = np.zeros((d_a, d_b), dtype=complex)
        core[start:start + m, start:start + m] = scale * block
        phis.append(PhiMatrix(label=alpha, entries=u1 @ core @ u2.conj().T, block_start=start))
        blocks.append(block)

    family = PhiFamily(
        matrices=tuple(phis),
        epsilon=epsilon,
        m=m,
        u1=u1,
        u2=u2,
        blocks=tuple(blocks),
        provenance={
            "kind": "block-diagonal",
            "u1": u1_spec.describe(),
            "u2": u2_spec.describe(),
            "block": block_spec.describe(),
        },
    )

    validation = validate_family(family, tolerance=CONSTRUCTION_TOLERANCE)
    if not validation.passed:
        logger.warning(f"Constructed family exceeds construction tolerance: {validation.failed_checks()}")
    logger.info(f"Built Phi family: d_a={d_a}, d_b={d_b}, m={m}, modes={n_modes}, epsilon={epsilon:+d}")
    return family


def _max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def deformation_parameter(phi: Union[PhiMatrix, np.ndarray]) -> float:
    """f = 2 Tr(Phi^dagger Phi Phi^dagger Phi)."""
    entries = phi.entries if isinstance(phi, PhiMatrix) else np.asarray(phi, dtype=complex)
    gram = entries.conj().T @ entries
    return float(2.0 * np.real(np.trace(gram @ gram)))


def validate_family(family: PhiFamily, tolerance: float = VALIDATION_TOLERANCE) -> ValidationReport:
    """
    Residuals of orthonormality, the cross-mode condition and the cubic condition.

    Cross-mode: Phi_b Phi_a^dagger Phi_c + Phi_c Phi_a^dagger Phi_b = 0 for a != b
    and every c. Cubic: Phi Phi^dagger Phi = (f/2) Phi with f extracted per mode.

    Args:
        family: Family to check
        tolerance: Pass threshold for every residual

    Returns:
        ValidationReport with pass flags per check
    """
    phis = [phi.entries for phi in family.matrices]
    n = len(phis)

    orthonormality = 0.0
    for a in range(n):
        for b in range(n):
            overlap = np.trace(phis[a] @ phis[b].conj().T)
            orthonormality = max(orthonormality, abs(overlap - (1.0 if a == b else 0.0)))

    cross = 0.0
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            for c in range(n):
                term = phis[b] @ phis[a].conj().T @ phis[c] + phis[c] @ phis[a].conj().T @ phis[b]
                cross = max(cross, _max_abs(term))

    f_hat = [deformation_parameter(phi) for phi in phis]
    cubic = max(
        _max_abs(phi @ phi.conj().T @ phi - (f / 2.0) * phi)
        for phi, f in zip(phis, f_hat)
    )
    f_expected = 2.0 / family.m
    f_deviation = max(abs(f - f_expected) for f in f_hat)

    report = ValidationReport(
        epsilon=family.epsilon,
        m=family.m,
        n_modes=n,
        d_a=family.d_a,
        d_b=family.d_b,
        orthonormality_residual=float(orthonormality),
        cross_mode_residual=cross,
        cubic_residual=cubic,
        f_hat=f_hat,
        f_expected=f_expected,
        f_deviation=f_deviation,
        tolerance=tolerance,
        checks={
            "orthonormality": bool(orthonormality <= tolerance),
            "cross_mode": bool(cross <= tolerance),
            "cubic": bool(cubic <= tolerance),
            "deformation_parameter": bool(f_deviation <= tolerance),
        },
    )
    logger.debug(
        f"Family residuals: orth={orthonormality:.2e}, cross={cross:.2e}, "
        f"cubic={cubic:.2e}, f_dev={f_deviation:.2e}"
    )
    return report


def schmidt_of_phi(phi: Union[PhiMatrix, np.ndarray]) -> SchmidtSpectrum:
    """
    Singular values of Phi, nonincreasing.

    For a valid family exactly m of them equal 1/sqrt(m) and the rest vanish.
    """
    entries = phi.entries if isinstance(phi, PhiMatrix) else np.asarray(phi, dtype=complex)
    return SchmidtSpectrum(tuple(np.linalg.svd(entries, compute_uv=False)))

"""Schmidt decomposition and bipartite entanglement measures.

Measures are computed two ways: from the Schmidt spectrum of the coefficient
matrix and from the reduced density matrices of both subsystems. Entropies
are in nats.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from src.errors import ParameterError
from src.fock_core import StateVector, bipartite_reshape
from src.logger import get_logger
from src.models import DensityMatrixReport, EntanglementReport

logger = get_logger()

RANK_THRESHOLD = 1e-12
NORMALIZATION_TOLERANCE = 1e-8
ROUTE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Nonincreasing Schmidt coefficients of a bipartite vector."""
    lambdas: Tuple[float, ...]
    renormalized: bool = False

    def __post_init__(self):
        values = tuple(sorted((float(x) for x in self.lambdas), reverse=True))
        if any(x < 0 for x in values):
            raise ParameterError("Schmidt coefficients must be nonnegative")
        object.__setattr__(self, "lambdas", values)

    @property
    def weights(self) -> np.ndarray:
        """Squared coefficients lambda_k^2."""
        return np.square(np.array(self.lambdas, dtype=float))

    @property
    def rank(self) -> int:
        if not self.lambdas or self.lambdas[0] == 0.0:
            return 0
        cut = RANK_THRESHOLD * self.lambdas[0]
        return sum(1 for x in self.lambdas if x > cut)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """
    Spectrum plus Schmidt vectors.

    ``left[:, k]`` holds |v_k> in the A basis and ``right[:, k]`` holds |w_k>
    in the B basis, so that M = sum_k lambda_k v_k w_k^T.
    """
    spectrum: SchmidtSpectrum
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        lambdas = np.array(self.spectrum.lambdas)
        return (self.left * lambdas) @ self.right.T


def _prepare(matrix: np.ndarray) -> Tuple[np.ndarray, bool]:
    coefficients = np.asarray(matrix, dtype=complex)
    if coefficients.ndim != 2:
        raise ParameterError(f"expected a 2-d coefficient matrix, got shape {coefficients.shape}")
    norm = float(np.linalg.norm(coefficients))
    if norm == 0.0:
        raise ParameterError("zero coefficient matrix does not describe a state")
    renormalized = abs(norm - 1.0) > NORMALIZATION_TOLERANCE
    if renormalized:
        logger.warning(f"Coefficient matrix has norm {norm:.6g}; normalizing before decomposition")
        coefficients = coefficients / norm
    return coefficients, renormalized


def schmidt_decompose(matrix: np.ndarray, return_vectors: bool = False):
    """
    Schmidt decomposition of a bipartite coefficient matrix.

    Args:
        matrix: d_A x d_B complex coefficients, Frobenius norm 1 within 1e-8
            (otherwise it is normalized first and the spectrum is flagged)
        return_vectors: Also return the Schmidt vectors

    Returns:
        SchmidtSpectrum, or SchmidtDecomposition when ``return_vectors`` is set
    """
    coefficients, renormalized = _prepare(matrix)
    if not return_vectors:
        values = linalg.svd(coefficients, compute_uv=False)
        return SchmidtSpectrum(tuple(values), renormalized=renormalized)

    u, values, vh = linalg.svd(coefficients, full_matrices=False)
    spectrum = SchmidtSpectrum(tuple(values), renormalized=renormalized)
    return SchmidtDecomposition(spectrum=spectrum, left=u, right=vh.T)


def _entropy(weights: np.ndarray) -> float:
    positive = weights[weights > 0.0]
    return float(-np.sum(positive * np.log(positive)))


def report(spectrum: SchmidtSpectrum) -> EntanglementReport:
    """
    Schmidt rank, Schmidt number, purity, entropy and concurrence.

    The concurrence prefactor uses the Schmidt rank r in place of m, and
    C = 0 for r = 1.

    Args:
        spectrum: Normalized Schmidt spectrum

    Returns:
        EntanglementReport
    """
    weights = spectrum.weights
    rank = spectrum.rank
    purity = float(np.sum(weights ** 2))
    if purity == 0.0:
        raise ParameterError("empty Schmidt spectrum")
    if rank > 1:
        concurrence = math.sqrt(max(0.0, rank / (rank - 1) * (1.0 - purity)))
        concurrence = min(concurrence, 1.0)
    else:
        concurrence = 0.0

    return EntanglementReport(
        rank=rank,
        schmidt_number=1.0 / purity,
        purity=purity,
        entropy=_entropy(weights),
        concurrence=concurrence,
        tolerances={"rank_threshold": RANK_THRESHOLD, "normalization": NORMALIZATION_TOLERANCE},
    )


def reduced_density_matrices(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reduced density matrices of the state with coefficient matrix M.

    Returns:
        (rho_a, rho_b) with rho_a = Tr_b |psi><psi| = M M^dagger and
        rho_b = Tr_a |psi><psi| = M^T conj(M)
    """
    coefficients = np.asarray(matrix, dtype=complex)
    rho_a = coefficients @ coefficients.conj().T
    rho_b = coefficients.T @ coefficients.conj()
    return rho_a, rho_b


def _density_measures(rho: np.ndarray) -> Tuple[float, float, np.ndarray]:
    eigenvalues = np.clip(linalg.eigvalsh(rho), 0.0, None)[::-1]
    purity = float(np.real(np.trace(rho @ rho)))
    return purity, _entropy(eigenvalues), eigenvalues


def reduced_density_check(state: StateVector, tolerance: float = ROUTE_TOLERANCE) -> DensityMatrixReport:
    """
    Cross-check spectrum-route and density-matrix-route measures.

    Args:
        state: Normalized state on a product space
        tolerance: Allowed disagreement between routes

    Returns:
        DensityMatrixReport; disagreements show up as ``passed == False``
    """
    coefficients, renormalized = _prepare(bipartite_reshape(state))
    spectrum = schmidt_decompose(coefficients)
    spectral = report(spectrum)

    rho_a, rho_b = reduced_density_matrices(coefficients)
    purity_a, entropy_a, eigen_a = _density_measures(rho_a)
    purity_b, entropy_b, _ = _density_measures(rho_b)

    rank = spectral.rank
    lambdas_sq = spectrum.weights[:rank]
    top = eigen_a[:rank]
    spectrum_residual = float(np.max(np.abs(top - lambdas_sq))) if rank else 0.0
    uniform_residual = float(np.max(np.abs(top - 1.0 / rank))) if rank else 0.0

    k_a, k_b = 1.0 / purity_a, 1.0 / purity_b
    deviation = max(
        abs(k_a - k_b),
        abs(entropy_a - entropy_b),
        abs(k_a - spectral.schmidt_number),
        abs(entropy_a - spectral.entropy),
    )
    result = DensityMatrixReport(
        schmidt_number_a=k_a,
        schmidt_number_b=k_b,
        entropy_a=entropy_a,
        entropy_b=entropy_b,
        purity_a=purity_a,
        purity_b=purity_b,
        schmidt_number_spectrum=spectral.schmidt_number,
        entropy_spectrum=spectral.entropy,
        spectrum_residual=spectrum_residual,
        uniform_mixture_residual=uniform_residual,
        max_deviation=deviation,
        tolerance=tolerance,
        renormalized=renormalized,
    )
    if not result.passed:
        logger.warning(f"Density-matrix and spectrum routes disagree by {deviation:.3e}")
    return result


def measure(matrix: np.ndarray) -> EntanglementReport:
    """Shorthand for ``report(schmidt_decompose(matrix))``."""
    return report(schmidt_decompose(matrix))


def measure_state(state: StateVector) -> EntanglementReport:
    """Entanglement report of a state on a product space."""
    return report(schmidt_decompose(bipartite_reshape(state)))

"""Deformed-oscillator side of the quasiboson realization.

Structure-function arithmetic is exact (``fractions.Fraction``); floats only
appear once operators act on explicit Fock spaces. The number operator N_alpha
is realized on the quasiboson span by grading: a monomial of degree k in
A_alpha^dagger has N_alpha = k.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from src.entanglement import RANK_THRESHOLD
from src.errors import ParameterError
from src.fock_core import (
    FockSpace,
    ProductSpace,
    SparseOperator,
    Statistics,
    creation_op,
    graded_compositions,
    make_space,
    vacuum,
)
from src.logger import get_logger
from src.models import RealizationReport
from src.phi_family import PhiFamily, PhiMatrix

logger = get_logger()

SPAN_DROP_THRESHOLD = 1e-10
NILPOTENCY_THRESHOLD = 1e-12
VERIFICATION_TOLERANCE = 1e-10


@dataclass(frozen=True)
class DeformationSpec:
    """Statistics sign and block size; f = 2/m exactly."""
    epsilon: int
    m: int

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ParameterError(f"epsilon must be +1 or -1, got {self.epsilon}")
        if self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")

    @property
    def f(self) -> Fraction:
        return Fraction(2, self.m)

    @classmethod
    def from_family(cls, family: PhiFamily) -> "DeformationSpec":
        return cls(epsilon=family.epsilon, m=family.m)


def structure_function(n: int, spec: DeformationSpec) -> Fraction:
    """
    phi(n) = (1 + eps f/2) n - eps (f/2) n^2.

    Args:
        n: Nonnegative integer
        spec: Deformation

    Returns:
        Exact rational value
    """
    if n < 0:
        raise ParameterError(f"structure function needs n >= 0, got {n}")
    half_f = spec.f / 2
    return (1 + spec.epsilon * half_f) * n - spec.epsilon * half_f * n * n


def check_recurrence(
    spec: DeformationSpec,
    n_max: int,
    phi: Optional[Callable[[int], Fraction]] = None
) -> bool:
    """
    Whether phi(n+1) = sum_{k=0}^{n} (-1)^(n-k) C(n+1, k) phi(k) for 2 <= n <= n_max.

    Args:
        spec: Deformation
        n_max: Largest n checked (>= 2)
        phi: Structure function to test; defaults to ``structure_function``

    Returns:
        True if the recurrence holds exactly
    """
    if n_max < 2:
        raise ParameterError(f"recurrence starts at n = 2, got n_max = {n_max}")
    phi = phi or (lambda k: structure_function(k, spec))
    values = [Fraction(phi(k)) for k in range(n_max + 2)]
    for n in range(2, n_max + 1):
        rhs = sum((-1) ** (n - k) * comb(n + 1, k) * values[k] for k in range(n + 1))
        if values[n + 1] != rhs:
            logger.debug(f"Recurrence fails at n={n}: {values[n + 1]} != {rhs}")
            return False
    return True


def phi_factorial(n: int, spec: DeformationSpec) -> Fraction:
    """phi(1) * ... * phi(n); the empty product is 1."""
    if n < 0:
        raise ParameterError(f"phi factorial needs n >= 0, got {n}")
    result = Fraction(1)
    for k in range(1, n + 1):
        result *= structure_function(k, spec)
    return result


def phi_factorial_closed_form(n: int, spec: DeformationSpec) -> Fraction:
    """(n!)^2 C(m, n) / m^n for fermions, (n!)^2 C(m+n-1, n) / m^n for bosons."""
    if n < 0:
        raise ParameterError(f"phi factorial needs n >= 0, got {n}")
    count = comb(spec.m, n) if spec.epsilon == 1 else comb(spec.m + n - 1, n)
    return Fraction(factorial(n) ** 2 * count, spec.m ** n)


def chi_ratio(spec: DeformationSpec, N: int) -> Fraction:
    """
    chi_{N+1} / chi_N with chi_N = phi(N)! / N!, i.e. phi(N+1) / (N+1).

    For fermionic constituents this equals 1 - N/m.
    """
    if N < 1:
        raise ParameterError(f"chi ratio needs N >= 1, got {N}")
    return structure_function(N + 1, spec) / (N + 1)


def chi_bounds(spec: DeformationSpec, N: int) -> Tuple[Fraction, Fraction]:
    """Lower and upper bound (1 - N/m, 1 - 1/m) on the chi ratio."""
    return 1 - Fraction(N, spec.m), 1 - Fraction(1, spec.m)


@dataclass(frozen=True)
class QuasibosonSystem:
    """Constituent spaces, their product and the operators A_alpha^dagger."""
    space_a: FockSpace
    space_b: FockSpace
    family: PhiFamily
    operators: Tuple[SparseOperator, ...]
    a_creators: Tuple[SparseOperator, ...] = field(repr=False)
    b_creators: Tuple[SparseOperator, ...] = field(repr=False)

    def __post_init__(self):
        if self.space_a.epsilon != self.family.epsilon or self.space_b.epsilon != self.family.epsilon:
            raise ParameterError("space statistics do not match the family epsilon")
        dim = self.product.dim
        if any(op.dim_in != dim or op.dim_out != dim for op in self.operators):
            raise ParameterError("quasiboson operators do not act on the product space")

    @property
    def product(self) -> ProductSpace:
        return ProductSpace(self.space_a, self.space_b)

    @property
    def epsilon(self) -> int:
        return self.family.epsilon

    @property
    def spec(self) -> DeformationSpec:
        return DeformationSpec.from_family(self.family)

    @property
    def n_modes(self) -> int:
        return len(self.operators)

    def creation(self, label: int) -> SparseOperator:
        """A_label^dagger, 1-based label."""
        if not 1 <= label <= self.n_modes:
            raise ParameterError(f"mode label {label} out of range 1..{self.n_modes}")
        return self.operators[label - 1]

    def annihilation(self, label: int) -> SparseOperator:
        return self.creation(label).adjoint()

    def exact_power_limit(self) -> int:
        """Largest p for which (A^dagger)^p |0> is unaffected by truncation."""
        if self.epsilon == 1:
            return min(self.space_a.n_modes, self.space_b.n_modes) + 1
        return min(self.space_a.max_quanta, self.space_b.max_quanta)


def _combine_creators(
    a_creators: Sequence[SparseOperator],
    b_creators: Sequence[SparseOperator],
    entries: np.ndarray
) -> SparseOperator:
    dim_a = a_creators[0].dim_in
    dim_b = b_creators[0].dim_in
    total = sp.csr_matrix((dim_a * dim_b, dim_a * dim_b), dtype=complex)
    for mu, row in enumerate(entries):
        if not np.any(row):
            continue
        b_part = sum(coeff * b_creators[nu].matrix for nu, coeff in enumerate(row) if coeff != 0)
        total = total + sp.kron(a_creators[mu].matrix, b_part, format="csr")
    return SparseOperator(total)


def quasiboson_creation(
    space_a: FockSpace,
    space_b: FockSpace,
    phi: Union[PhiMatrix, np.ndarray]
) -> SparseOperator:
    """
    A^dagger = sum_{mu nu} Phi^{mu nu} a_mu^dagger b_nu^dagger on the product space.

    Args:
        space_a: a-constituent space with d_a modes
        space_b: b-constituent space with d_b modes
        phi: d_a x d_b coefficient matrix

    Returns:
        SparseOperator on space_a (x) space_b
    """
    entries = phi.entries if isinstance(phi, PhiMatrix) else np.asarray(phi, dtype=complex)
    if entries.shape != (space_a.n_modes, space_b.n_modes):
        raise ParameterError(
            f"Phi has shape {entries.shape}, spaces have {(space_a.n_modes, space_b.n_modes)} modes"
        )
    if space_a.statistics is not space_b.statistics:
        raise ParameterError("both constituents must share their statistics")
    a_creators = [creation_op(space_a, mu) for mu in range(space_a.n_modes)]
    b_creators = [creation_op(space_b, nu) for nu in range(space_b.n_modes)]
    return _combine_creators(a_creators, b_creators, entries)


def build_system(
    family: PhiFamily,
    max_quanta: Optional[int] = None,
    max_quanta_b: Optional[int] = None
) -> QuasibosonSystem:
    """
    Explicit constituent spaces and quasiboson operators for a family.

    Fermionic spaces are always complete (cutoff = number of modes). Bosonic
    spaces need a cutoff; ``max_quanta_b`` defaults to ``max_quanta``.

    Args:
        family: Phi family
        max_quanta: Total-quanta cutoff of species a
        max_quanta_b: Total-quanta cutoff of species b

    Returns:
        QuasibosonSystem
    """
    statistics = Statistics.from_epsilon(family.epsilon)
    if statistics is Statistics.FERMIONIC:
        cut_a, cut_b = family.d_a, family.d_b
    else:
        if max_quanta is None:
            raise ParameterError("bosonic constituents need a total-quanta cutoff")
        cut_a = max_quanta
        cut_b = max_quanta if max_quanta_b is None else max_quanta_b

    space_a = make_space(statistics, family.d_a, cut_a)
    space_b = make_space(statistics, family.d_b, cut_b)
    a_creators = tuple(creation_op(space_a, mu) for mu in range(space_a.n_modes))
    b_creators = tuple(creation_op(space_b, nu) for nu in range(space_b.n_modes))
    operators = tuple(_combine_creators(a_creators, b_creators, phi.entries) for phi in family.matrices)

    logger.info(
        f"Built quasiboson system: {statistics.value}, dims {space_a.dim}x{space_b.dim}, "
        f"{len(operators)} modes"
    )
    return QuasibosonSystem(
        space_a=space_a,
        space_b=space_b,
        family=family,
        operators=operators,
        a_creators=a_creators,
        b_creators=b_creators,
    )


def _bilinear(creators: Sequence[SparseOperator], coefficients: np.ndarray) -> SparseOperator:
    """sum_{i j} coefficients[i, j] c_i^dagger c_j."""
    dim = creators[0].dim_in
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for i, j in zip(*np.nonzero(np.abs(coefficients) > 0)):
        total = total + coefficients[i, j] * (creators[i].matrix @ creators[j].matrix.conj().T)
    return SparseOperator(total)


def deviation_operator(system: QuasibosonSystem, alpha: int, beta: int) -> SparseOperator:
    """
    Delta_{alpha beta} = sum (Phi_b Phi_a^dagger)^{mu' mu} a_mu'^dagger a_mu
                       + sum (Phi_a^dagger Phi_b)^{nu nu'} b_nu'^dagger b_nu.

    Args:
        system: Quasiboson system
        alpha: 1-based mode label
        beta: 1-based mode label

    Returns:
        SparseOperator on the product space
    """
    phi_a = system.family.phi(alpha).entries
    phi_b = system.family.phi(beta).entries
    a_part = _bilinear(system.a_creators, phi_b @ phi_a.conj().T)
    # (Phi_a^dagger Phi_b)^{nu nu'} multiplies b_nu'^dagger b_nu: transpose to (row=nu', col=nu).
    b_part = _bilinear(system.b_creators, (phi_a.conj().T @ phi_b).T)
    product = system.product
    return product.embed_a(a_part) + product.embed_b(b_part)


def schmidt_mode_operators(
    system: QuasibosonSystem,
    label: int
) -> Tuple[np.ndarray, List[SparseOperator], List[SparseOperator]]:
    """
    Operator Schmidt form A^dagger = sum_k lambda_k v_k^dagger w_k^dagger.

    Returns:
        (lambdas, v_k^dagger lifted to the product space, w_k^dagger lifted)
        for the nonvanishing Schmidt coefficients
    """
    u, values, vh = np.linalg.svd(system.family.phi(label).entries)
    keep = [k for k, s in enumerate(values) if s > RANK_THRESHOLD * values[0]]
    product = system.product
    v_ops, w_ops = [], []
    for k in keep:
        v = sum(u[mu, k] * system.a_creators[mu].matrix for mu in range(len(system.a_creators)))
        w = sum(vh[k, nu] * system.b_creators[nu].matrix for nu in range(len(system.b_creators)))
        v_ops.append(product.embed_a(SparseOperator(v)))
        w_ops.append(product.embed_b(SparseOperator(w)))
    return values[keep], v_ops, w_ops


def operator_schmidt_residuals(system: QuasibosonSystem, label: int) -> Tuple[float, float]:
    """
    Residuals of A^dagger = sum lambda v^dagger w^dagger and
    Delta = sum lambda^2 (v^dagger v + w^dagger w) for one mode.
    """
    lambdas, v_ops, w_ops = schmidt_mode_operators(system, label)
    dim = system.product.dim
    rebuilt = SparseOperator.zero(dim, dim)
    delta = SparseOperator.zero(dim, dim)
    for lam, v, w in zip(lambdas, v_ops, w_ops):
        rebuilt = rebuilt + (v @ w) * float(lam)
        delta = delta + (v @ v.adjoint() + w @ w.adjoint()) * float(lam) ** 2
    creation_residual = (system.creation(label) - rebuilt).max_abs()
    deviation_residual = (deviation_operator(system, label, label) - delta).max_abs()
    return creation_residual, deviation_residual


@dataclass(frozen=True)
class QuasibosonSpan:
    """Orthonormal basis of the span of monomials in A^dagger applied to the vacuum."""
    vectors: np.ndarray
    degrees: Tuple[Tuple[int, ...], ...]
    monomial_norms: Dict[Tuple[int, ...], float]
    n_max: int

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.vectors @ (self.vectors.conj().T @ x)

    def number(self, label: int, x: np.ndarray) -> np.ndarray:
        """N_label applied to x through its projection on the span."""
        grades = np.array([deg[label - 1] for deg in self.degrees], dtype=float)
        return self.vectors @ (grades * (self.vectors.conj().T @ x))

    def total_degree(self, index: int) -> int:
        return sum(self.degrees[index])


def monomial_vector(system: QuasibosonSystem, degrees: Sequence[int]) -> np.ndarray:
    vector = vacuum(system.product).amplitudes.copy()
    for label in range(len(degrees), 0, -1):
        op = system.creation(label)
        for _ in range(degrees[label - 1]):
            vector = op.apply(vector)
    return vector


def quasiboson_span(system: QuasibosonSystem, n_max: int) -> QuasibosonSpan:
    """
    Orthonormalized span of all monomials of total degree <= n_max.

    Modified Gram-Schmidt with one re-orthogonalization pass; vectors whose
    residual norm falls below 1e-10 (nilpotent monomials) are dropped.

    Args:
        system: Quasiboson system
        n_max: Largest total degree

    Returns:
        QuasibosonSpan
    """
    if n_max < 0:
        raise ParameterError(f"n_max must be >= 0, got {n_max}")
    if n_max > min(system.space_a.max_quanta, system.space_b.max_quanta):
        raise ParameterError(
            f"degree {n_max} exceeds the constituent cutoffs "
            f"({system.space_a.max_quanta}, {system.space_b.max_quanta})"
        )

    basis: List[np.ndarray] = []
    degrees: List[Tuple[int, ...]] = []
    norms: Dict[Tuple[int, ...], float] = {}
    for total in range(n_max + 1):
        for degs in graded_compositions(total, system.n_modes, total):
            raw = monomial_vector(system, degs)
            norms[degs] = float(np.linalg.norm(raw))
            residual = raw
            for _ in range(2):
                for e in basis:
                    residual = residual - e * np.vdot(e, residual)
            size = float(np.linalg.norm(residual))
            if size < SPAN_DROP_THRESHOLD:
                logger.debug(f"Monomial {degs} dropped from span (norm {size:.2e})")
                continue
            basis.append(residual / size)
            degrees.append(degs)

    vectors = np.column_stack(basis) if basis else np.zeros((system.product.dim, 0), dtype=complex)
    logger.debug(f"Quasiboson span up to degree {n_max}: dimension {len(basis)}")
    return QuasibosonSpan(vectors=vectors, degrees=tuple(degrees), monomial_norms=norms, n_max=n_max)


def vacuum_norm(system: QuasibosonSystem, label: int, n: int) -> float:
    """<0| A^n (A^dagger)^n |0> from explicit matrices."""
    degrees = [0] * system.n_modes
    degrees[label - 1] = n
    return float(np.linalg.norm(monomial_vector(system, degrees)) ** 2)


def nilpotency_order(system: QuasibosonSystem, label: int) -> Optional[int]:
    """Smallest p with ||(A^dagger)^p |0>|| < 1e-12, or None if none up to the exact limit."""
    op = system.creation(label)
    vector = vacuum(system.product).amplitudes.copy()
    for power in range(1, system.exact_power_limit() + 1):
        vector = op.apply(vector)
        if np.linalg.norm(vector) < NILPOTENCY_THRESHOLD:
            return power
    return None


def verify_realization(
    system: QuasibosonSystem,
    n_max: int,
    tolerance: float = VERIFICATION_TOLERANCE
) -> RealizationReport:
    """
    Check the deformed-oscillator relations on the quasiboson span.

    Residuals (max vector norms over the orthonormal span basis):
      - cross-mode: [A_a, A_b^dagger] for a != b;
      - structure function: [A_a, A_a^dagger] - (phi(N_a + 1) - phi(N_a));
      - ladder: [N_a, A_a^dagger] - A_a^dagger and [N_a, A_a] + A_a, including
        any component of A^dagger e or A e that leaves the span;
      - deviation identity: [A_a, A_b^dagger] - (delta_ab - eps Delta_ab);
      - vacuum norms: <0|A^n (A^dagger)^n|0> - phi(n)!.

    Args:
        system: Quasiboson system; bosonic cutoffs must be >= n_max + 1
        n_max: Largest total degree of the span
        tolerance: Pass threshold

    Returns:
        RealizationReport
    """
    if system.epsilon == -1 and min(system.space_a.max_quanta, system.space_b.max_quanta) < n_max + 1:
        raise ParameterError(f"bosonic cutoffs must be at least n_max + 1 = {n_max + 1} for exact commutators")

    spec = system.spec
    span = quasiboson_span(system, n_max)
    n = system.n_modes
    raising = [system.creation(label) for label in range(1, n + 1)]
    lowering = [op.adjoint() for op in raising]
    deviations = {
        (a, b): deviation_operator(system, a + 1, b + 1) for a in range(n) for b in range(n)
    }
    phi_steps = [float(structure_function(k + 1, spec) - structure_function(k, spec)) for k in range(n_max + 1)]

    cross = structure = ladder = identity = 0.0
    for i in range(span.dimension):
        e = span.vectors[:, i]
        degs = span.degrees[i]
        up = [op.apply(e) for op in raising]
        down = [op.apply(e) for op in lowering]

        for a in range(n):
            for b in range(n):
                comm = lowering[a].apply(up[b]) - raising[b].apply(down[a])
                expected = (1.0 if a == b else 0.0) * e - system.epsilon * deviations[(a, b)].apply(e)
                identity = max(identity, float(np.linalg.norm(comm - expected)))
                if a != b:
                    cross = max(cross, float(np.linalg.norm(comm)))
                else:
                    target = phi_steps[degs[a]] * e
                    structure = max(structure, float(np.linalg.norm(comm - target)))

            k = degs[a]
            if span.total_degree(i) < n_max:
                x = up[a]
                leak = float(np.linalg.norm(x - span.project(x)))
                ladder = max(ladder, leak, float(np.linalg.norm(span.number(a + 1, x) - (k + 1) * x)))
            y = down[a]
            leak = float(np.linalg.norm(y - span.project(y)))
            ladder = max(ladder, leak, float(np.linalg.norm(span.number(a + 1, y) - (k - 1) * y)))

    orders = [nilpotency_order(system, label) for label in range(1, n + 1)]
    expected_order = spec.m + 1 if system.epsilon == 1 else None

    norm_limit = min(n_max, system.exact_power_limit())
    norm_residual = 0.0
    for label in range(1, n + 1):
        for power in range(norm_limit + 1):
            exact = float(phi_factorial(power, spec))
            measured = vacuum_norm(system, label, power)
            norm_residual = max(norm_residual, abs(measured - exact) / max(1.0, abs(exact)))

    report = RealizationReport(
        epsilon=system.epsilon,
        m=spec.m,
        n_modes=n,
        n_max=n_max,
        span_dimension=span.dimension,
        cross_mode_residual=cross,
        ladder_residual=ladder,
        structure_function_residual=structure,
        deviation_identity_residual=identity,
        vacuum_norm_residual=norm_residual,
        nilpotency_orders=orders,
        expected_nilpotency=expected_order,
        tolerance=tolerance,
        checks={
            "cross_mode": bool(cross <= tolerance),
            "ladder": bool(ladder <= tolerance),
            "structure_function": bool(structure <= tolerance),
            "deviation_identity": bool(identity <= tolerance),
            "vacuum_norms": bool(norm_residual <= tolerance),
            "nilpotency": all(order == expected_order for order in orders),
        },
        provenance={
            "d_a": system.family.d_a,
            "d_b": system.family.d_b,
            "cutoff_a": system.space_a.max_quanta,
            "cutoff_b": system.space_b.max_quanta,
            "family": system.family.provenance,
        },
    )
    if report.passed:
        logger.info(f"Realization verified on span of dimension {span.dimension}")
    else:
        logger.warning(f"Realization checks failed: {report.failed_checks()}")
    return report

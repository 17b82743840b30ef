"""Constituent Fock spaces and sparse second-quantized operators.

Basis states are occupation vectors enumerated graded by total quanta and,
within a grade, with lower modes filled first (so the vacuum is index 0 and
``|10>`` precedes ``|01>``). Fermionic creation operators carry the
Jordan-Wigner sign (-1)^(occupied modes with smaller index). Species a and b
are tensor factors of a ``ProductSpace``: b-operators act as ``Id (x) b`` and
pick up no sign from the a-factor.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np
import scipy.sparse as sp

from src.errors import ParameterError, UsageError
from src.logger import get_logger

logger = get_logger()

Occupation = Tuple[int, ...]


class Statistics(str, Enum):
    """Constituent statistics; epsilon is +1 for fermions and -1 for bosons."""
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"

    @property
    def epsilon(self) -> int:
        return 1 if self is Statistics.FERMIONIC else -1

    @classmethod
    def from_epsilon(cls, epsilon: int) -> "Statistics":
        if epsilon == 1:
            return cls.FERMIONIC
        if epsilon == -1:
            return cls.BOSONIC
        raise ParameterError(f"epsilon must be +1 or -1, got {epsilon}")


def graded_compositions(total: int, n_parts: int, cap: int) -> Iterator[Occupation]:
    """
    Enumerate vectors of ``n_parts`` entries in [0, cap] summing to ``total``.

    Vectors are yielded with the leftmost entry largest first, which puts
    ``(1, 0)`` before ``(0, 1)``.
    """
    if n_parts == 1:
        if total <= cap:
            yield (total,)
        return
    for first in range(min(total, cap), -1, -1):
        for rest in graded_compositions(total - first, n_parts - 1, cap):
            yield (first,) + rest


@dataclass(frozen=True)
class FockSpace:
    """Truncated occupation-number basis for one constituent species."""
    statistics: Statistics
    n_modes: int
    max_quanta: int
    basis: Tuple[Occupation, ...]
    index: Dict[Occupation, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {occ: i for i, occ in enumerate(self.basis)})

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def epsilon(self) -> int:
        return self.statistics.epsilon

    def position(self, occupation: Occupation) -> int:
        """Basis position of an occupation vector."""
        try:
            return self.index[tuple(occupation)]
        except KeyError as e:
            raise ParameterError(f"occupation {tuple(occupation)} not in basis") from e

    def to_dict(self) -> Dict:
        """Debug dump of the space."""
        return {
            "statistics": self.statistics.value,
            "n_modes": self.n_modes,
            "max_quanta": self.max_quanta,
            "basis": [list(occ) for occ in self.basis],
        }


def make_space(statistics: Statistics, n_modes: int, max_quanta: int) -> FockSpace:
    """
    Enumerate a constituent Fock space.

    Args:
        statistics: Fermionic or bosonic constituents
        n_modes: Number of single-particle modes (d_a or d_b)
        max_quanta: Total-quanta cutoff

    Returns:
        FockSpace with the vacuum at position 0
    """
    statistics = Statistics(statistics)
    if n_modes < 1:
        raise ParameterError(f"n_modes must be >= 1, got {n_modes}")
    if max_quanta < 0:
        raise ParameterError(f"max_quanta must be >= 0, got {max_quanta}")
    if statistics is Statistics.FERMIONIC and max_quanta > n_modes:
        raise ParameterError(
            f"fermionic cutoff {max_quanta} exceeds the number of modes {n_modes}"
        )

    cap = 1 if statistics is Statistics.FERMIONIC else max_quanta
    basis = tuple(
        occ
        for total in range(max_quanta + 1)
        for occ in graded_compositions(total, n_modes, cap)
    )
    space = FockSpace(statistics=statistics, n_modes=n_modes, max_quanta=max_quanta, basis=basis)
    logger.debug(f"Built {statistics.value} space: {n_modes} modes, cutoff {max_quanta}, dim {space.dim}")
    return space


@dataclass(frozen=True)
class SparseOperator:
    """Linear operator stored as a canonical CSR matrix."""
    matrix: sp.csr_matrix

    def __post_init__(self):
        matrix = sp.csr_matrix(self.matrix, dtype=complex, copy=True)
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_entries(
        cls,
        dim_out: int,
        dim_in: int,
        entries: List[Tuple[int, int, complex]]
    ) -> "SparseOperator":
        """Build an operator from (row, col, value) triplets; duplicates are summed."""
        if dim_out < 1 or dim_in < 1:
            raise ParameterError(f"operator dimensions must be positive, got {dim_out}x{dim_in}")
        rows = [r for r, _, _ in entries]
        cols = [c for _, c, _ in entries]
        if any(not 0 <= r < dim_out for r in rows) or any(not 0 <= c < dim_in for c in cols):
            raise ParameterError("operator entry index out of bounds")
        values = np.array([v for _, _, v in entries], dtype=complex)
        matrix = sp.coo_matrix((values, (rows, cols)), shape=(dim_out, dim_in))
        return cls(matrix.tocsr())

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sp.identity(dim, dtype=complex, format="csr"))

    @classmethod
    def zero(cls, dim_out: int, dim_in: int) -> "SparseOperator":
        return cls(sp.csr_matrix((dim_out, dim_in), dtype=complex))

    @property
    def dim_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_square(self) -> bool:
        return self.dim_out == self.dim_in

    def entries(self) -> List[Tuple[int, int, complex]]:
        """Nonzero entries sorted by (row, col)."""
        coo = self.matrix.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr())

    def max_abs(self) -> float:
        """Largest entry magnitude (0 for the zero operator)."""
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, vector: np.ndarray) -> np.ndarray:
        if vector.shape[0] != self.dim_in:
            raise ParameterError(f"vector length {vector.shape[0]} does not match operator input {self.dim_in}")
        return self.matrix @ vector

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            if self.dim_in != other.dim_out:
                raise ParameterError(
                    f"cannot compose {self.dim_out}x{self.dim_in} with {other.dim_out}x{other.dim_in}"
                )
            return SparseOperator(self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return other.apply(self)
        return self.apply(np.asarray(other))

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        _check_same_shape(self, other)
        return SparseOperator(self.matrix + other.matrix)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        _check_same_shape(self, other)
        return SparseOperator(self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return SparseOperator(-self.matrix)

    def to_dict(self) -> Dict:
        """Debug dump as entry triplets."""
        return {
            "dim_out": self.dim_out,
            "dim_in": self.dim_in,
            "entries": [[r, c, v.real, v.imag] for r, c, v in self.entries()],
        }


def _check_same_shape(x: SparseOperator, y: SparseOperator) -> None:
    if x.matrix.shape != y.matrix.shape:
        raise ParameterError(f"operator shapes differ: {x.matrix.shape} vs {y.matrix.shape}")


@dataclass(frozen=True)
class ProductSpace:
    """Bipartite space A (x) B with row-major index i_a * dim_b + i_b."""
    space_a: FockSpace
    space_b: FockSpace

    @property
    def dim(self) -> int:
        return self.space_a.dim * self.space_b.dim

    def position(self, occ_a: Occupation, occ_b: Occupation) -> int:
        return self.space_a.position(occ_a) * self.space_b.dim + self.space_b.position(occ_b)

    def embed_a(self, op: SparseOperator) -> SparseOperator:
        """Lift an a-species operator to op (x) Id."""
        if op.dim_in != self.space_a.dim or op.dim_out != self.space_a.dim:
            raise ParameterError("operator does not act on species a")
        return SparseOperator(sp.kron(op.matrix, sp.identity(self.space_b.dim, format="csr"), format="csr"))

    def embed_b(self, op: SparseOperator) -> SparseOperator:
        """Lift a b-species operator to Id (x) op."""
        if op.dim_in != self.space_b.dim or op.dim_out != self.space_b.dim:
            raise ParameterError("operator does not act on species b")
        return SparseOperator(sp.kron(sp.identity(self.space_a.dim, format="csr"), op.matrix, format="csr"))


Space = Union[FockSpace, ProductSpace]


@dataclass(frozen=True)
class StateVector:
    """Dense amplitudes on a single or bipartite space."""
    space: Space
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != self.space.dim:
            raise ParameterError(
                f"state has {amplitudes.shape[0]} amplitudes, space has dimension {self.space.dim}"
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= 1e-12

    def normalized(self) -> "StateVector":
        norm = self.norm
        if norm == 0.0:
            raise ParameterError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / norm)

    def apply(self, op: SparseOperator) -> "StateVector":
        return StateVector(self.space, op.apply(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def vacuum(space: Space) -> StateVector:
    """The vacuum state, basis element 0."""
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[0] = 1.0
    return StateVector(space, amplitudes)


def creation_op(space: FockSpace, mode: int) -> SparseOperator:
    """
    Creation operator for one mode.

    Fermionic matrix elements are +-1 with the Jordan-Wigner sign; bosonic
    ones are sqrt(n + 1). Transitions that would leave the basis (occupied
    fermionic mode, or bosonic total above the cutoff) are dropped.

    Args:
        space: Constituent Fock space
        mode: Mode index in [0, n_modes)

    Returns:
        SparseOperator on the space
    """
    if not 0 <= mode < space.n_modes:
        raise ParameterError(f"mode {mode} out of range for {space.n_modes} modes")

    fermionic = space.statistics is Statistics.FERMIONIC
    entries = []
    for col, occ in enumerate(space.basis):
        if sum(occ) >= space.max_quanta:
            continue
        if fermionic:
            if occ[mode]:
                continue
            value = -1.0 if sum(occ[:mode]) % 2 else 1.0
        else:
            value = float(np.sqrt(occ[mode] + 1))
        target = occ[:mode] + (occ[mode] + 1,) + occ[mode + 1:]
        entries.append((space.index[target], col, value))
    return SparseOperator.from_entries(space.dim, space.dim, entries)


def annihilation_op(space: FockSpace, mode: int) -> SparseOperator:
    """Annihilation operator: the conjugate transpose of ``creation_op``."""
    return creation_op(space, mode).adjoint()


def number_op(space: FockSpace, mode: int) -> SparseOperator:
    """Occupation number of one mode."""
    return creation_op(space, mode) @ annihilation_op(space, mode)


def commutator(x: SparseOperator, y: SparseOperator, anti: bool = False) -> SparseOperator:
    """
    xy - yx, or xy + yx when ``anti`` is set.

    Args:
        x: Square operator
        y: Square operator of the same dimension
        anti: Return the anticommutator instead

    Returns:
        Canonicalized SparseOperator
    """
    if not (x.is_square and y.is_square) or x.dim_in != y.dim_in:
        raise ParameterError(
            f"commutator needs square operators of equal size, got {x.matrix.shape} and {y.matrix.shape}"
        )
    xy = x @ y
    yx = y @ x
    return xy + yx if anti else xy - yx


def bipartite_reshape(state: StateVector) -> np.ndarray:
    """
    Coefficient matrix M[i, j] of |i>_A (x) |j>_B.

    Args:
        state: State on a ProductSpace

    Returns:
        dim_A x dim_B complex matrix
    """
    if not isinstance(state.space, ProductSpace):
        raise UsageError("bipartite_reshape needs a state on a product space")
    return state.amplitudes.reshape(state.space.space_a.dim, state.space.space_b.dim).copy()

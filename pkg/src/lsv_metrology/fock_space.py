"""
Bosonic Fock space of N spin-1 particles in the symmetric subspace.

The three modes m = +1, 0, -1 carry the occupations (n+, n0, n-) with
n+ + n0 + n- = N, so the space has (N+1)(N+2)/2 states instead of 3^N.
Basis order is lexicographic by (n+, n0) descending; for N = 2 it reads

    (2,0,0), (1,1,0), (1,0,1), (0,2,0), (0,1,1), (0,0,2)

Collective operators act through the spin-1 ladder J+ = sqrt(2) (a+^dag a0 + a0^dag a-).
Rotations use the right-handed convention exp(-i angle J_axis) everywhere, so a
pi/2 rotation about x maps <Jz> onto the former <Jy>.
"""

# SPDX-License-Identifier: Apache-2.0

import enum
import functools
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.linalg import expm_multiply

from lsv_metrology import (
    EXPECTATION_IMAG_TOL,
    EXPM_ROUNDOFF_FACTOR,
    HERMITIAN_TOL,
    NORM_TOL,
    ROTATION_TOL,
)
from lsv_metrology.errors import BasisMismatchError, ConvergenceError, NonHermitianError

log = logging.getLogger(__name__)

Occupation = Tuple[int, int, int]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Ordered occupation triples of N bosons in three modes."""

    N: int
    n_plus: np.ndarray
    n_zero: np.ndarray

    @property
    def n_minus(self) -> np.ndarray:
        return self.N - self.n_plus - self.n_zero

    def __len__(self) -> int:
        return len(self.n_plus)

    @property
    def states(self) -> List[Occupation]:
        return [(int(p), int(z), int(m)) for p, z, m in zip(self.n_plus, self.n_zero, self.n_minus)]

    @functools.cached_property
    def index(self) -> Dict[Occupation, int]:
        return {state: position for position, state in enumerate(self.states)}

    def position(self, n_plus, n_zero):
        """Return the basis position of (n_plus, n_zero, N - n_plus - n_zero), works on arrays too."""
        rest = self.N - np.asarray(n_plus)
        positions = rest * (rest + 1) // 2 + (rest - np.asarray(n_zero))
        return positions if positions.ndim else int(positions)

    def position_of(self, occupation: Occupation) -> int:
        n_plus, n_zero, n_minus = occupation
        if min(occupation) < 0 or n_plus + n_zero + n_minus != self.N:
            raise ValueError(f"Occupation {occupation} is not a state of the N={self.N} basis")
        return self.position(n_plus, n_zero)


@functools.lru_cache(maxsize=32)
def enumerate_basis(N: int) -> FockBasis:
    """Return the Fock basis of N particles; N = 0 yields the vacuum only."""
    if N < 0:
        raise ValueError(f"Particle count must be non-negative, got {N}")

    n_plus = np.repeat(np.arange(N, -1, -1), np.arange(1, N + 2))
    rest = N - n_plus
    offset = np.arange(len(n_plus)) - rest * (rest + 1) // 2
    n_zero = rest - offset
    log.debug("Enumerated Fock basis for N=%d with %d states", N, len(n_plus))
    return FockBasis(N=N, n_plus=_readonly(n_plus), n_zero=_readonly(n_zero))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over a FockBasis."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.shape != (len(self.basis),):
            raise ValueError(f"Expected {len(self.basis)} amplitudes, got shape {amplitudes.shape}")
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"State vector is not normalized, norm is {norm!r}")
        object.__setattr__(self, "amplitudes", _readonly(amplitudes))

    @classmethod
    def from_occupations(cls, N: int, weights: Dict[Occupation, complex]) -> "StateVector":
        """Build a state from a sparse map of occupation triples to amplitudes."""
        basis = enumerate_basis(N)
        amplitudes = np.zeros(len(basis), dtype=complex)
        for occupation, weight in weights.items():
            amplitudes[basis.position_of(occupation)] += weight
        return cls(basis, amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, occupation: Occupation) -> complex:
        return complex(self.amplitudes[self.basis.position_of(occupation)])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class OperatorKind(str, enum.Enum):
    """Collective operators available from build_operator."""

    JX = "Jx"
    JY = "Jy"
    JZ = "Jz"
    H = "H"
    PARITY0 = "Parity0"
    BX10 = "Bx10"  # (a+^dag a0 + a0^dag a+)/2, beam splitter between m=+1 and m=0


@dataclass(frozen=True, eq=False)
class CollectiveOperator:
    """Sparse operator over a FockBasis."""

    basis: FockBasis
    matrix: sp.csr_matrix
    hermitian: bool
    kind: str = "custom"

    @classmethod
    def from_matrix(cls, basis: FockBasis, matrix, kind: str = "custom") -> "CollectiveOperator":
        matrix = sp.csr_matrix(matrix, dtype=complex, copy=True)
        if matrix.shape != (len(basis), len(basis)):
            raise ValueError(f"Operator shape {matrix.shape} does not fit basis of size {len(basis)}")
        matrix.eliminate_zeros()
        matrix.sum_duplicates()
        matrix.sort_indices()
        for array in (matrix.data, matrix.indices, matrix.indptr):
            _readonly(array)
        return cls(basis=basis, matrix=matrix, hermitian=_is_hermitian(matrix), kind=kind)

    def entries(self) -> List[Tuple[int, int, complex]]:
        """Return the nonzero entries as (row, column, value) triples."""
        coo = self.matrix.tocoo()
        return [(int(r), int(c), complex(v)) for r, c, v in zip(coo.row, coo.col, coo.data)]

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.matrix @ amplitudes

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def commutator(self, other: "CollectiveOperator") -> "CollectiveOperator":
        """Return [self, other]."""
        _check_same_basis(self.basis, other.basis)
        product = self.matrix @ other.matrix - other.matrix @ self.matrix
        return CollectiveOperator.from_matrix(self.basis, product, kind=f"[{self.kind},{other.kind}]")


def _is_hermitian(matrix: sp.spmatrix) -> bool:
    difference = matrix - matrix.conj().T
    return difference.nnz == 0 or abs(difference).max() <= HERMITIAN_TOL


def _check_same_basis(first: FockBasis, second: FockBasis):
    if first is not second and first.N != second.N:
        raise BasisMismatchError(f"Basis mismatch: N={first.N} vs N={second.N}")


def _ladder_matrix(basis: FockBasis, plus_zero_factor: float, zero_minus_factor: float) -> sp.csr_matrix:
    """Return plus_zero_factor * a+^dag a0 + zero_minus_factor * a0^dag a- as sparse matrix."""
    n_plus, n_zero, n_minus = basis.n_plus, basis.n_zero, basis.n_minus
    columns = np.arange(len(basis))

    up = n_zero > 0
    rows_up = basis.position(n_plus[up] + 1, n_zero[up] - 1)
    values_up = plus_zero_factor * np.sqrt((n_plus[up] + 1.0) * n_zero[up])

    down = (n_minus > 0) & (zero_minus_factor != 0.0)
    rows_down = basis.position(n_plus[down], n_zero[down] + 1)
    values_down = zero_minus_factor * np.sqrt((n_zero[down] + 1.0) * n_minus[down])

    rows = np.concatenate([np.atleast_1d(rows_up), np.atleast_1d(rows_down)]).astype(np.int64)
    cols = np.concatenate([columns[up], columns[down]])
    values = np.concatenate([values_up, values_down]).astype(complex)
    return sp.csr_matrix((values, (rows, cols)), shape=(len(basis), len(basis)))


@functools.lru_cache(maxsize=64)
def build_operator(basis: FockBasis, kind: Union[OperatorKind, str]) -> CollectiveOperator:
    """Return the collective operator of the given kind; results are cached per basis."""
    kind = OperatorKind(kind)
    dimension = len(basis)

    if kind in (OperatorKind.JX, OperatorKind.JY):
        raising = _ladder_matrix(basis, np.sqrt(2.0), np.sqrt(2.0))
        lowering = raising.conj().T
        matrix = (raising + lowering) / 2.0 if kind == OperatorKind.JX else (raising - lowering) / 2.0j
    elif kind == OperatorKind.BX10:
        transfer = _ladder_matrix(basis, 1.0, 0.0)
        matrix = (transfer + transfer.conj().T) / 2.0
    else:
        if kind == OperatorKind.JZ:
            diagonal = basis.n_plus - basis.n_minus
        elif kind == OperatorKind.H:
            diagonal = basis.n_plus + basis.n_minus
        else:
            diagonal = 1 - 2 * (basis.n_zero % 2)
        matrix = sp.diags(diagonal.astype(complex), 0, shape=(dimension, dimension))

    operator = CollectiveOperator.from_matrix(basis, matrix, kind=kind.value)
    if not operator.hermitian:
        raise NonHermitianError(f"Constructed operator {kind.value} is not Hermitian")
    log.debug("Built operator %s for N=%d with %d entries", kind.value, basis.N, operator.matrix.nnz)
    return operator


def expectation(state: StateVector, op: CollectiveOperator) -> float:
    """Return <state|op|state> for a Hermitian operator."""
    _check_same_basis(state.basis, op.basis)
    if not op.hermitian:
        raise NonHermitianError(f"Expectation value requires a Hermitian operator, got {op.kind}")

    value = np.vdot(state.amplitudes, op.apply(state.amplitudes))
    if abs(value.imag) > EXPECTATION_IMAG_TOL * max(1.0, abs(value.real)):
        raise RuntimeError(f"Expectation of {op.kind} has imaginary residue {value.imag!r}")
    return float(value.real)


def apply_diagonal_phase(state: StateVector, theta: float) -> StateVector:
    """Return exp(-i theta H) |state> with H = n+ + n-, the generator of kappa t."""
    phases = np.exp(-1j * theta * (state.basis.n_plus + state.basis.n_minus))
    return StateVector(state.basis, state.amplitudes * phases)


def expm_action(matrix, vector: np.ndarray, angle: float, tol: float = ROTATION_TOL) -> np.ndarray:
    """Return exp(-i angle matrix) @ vector for a Hermitian sparse matrix.

    scipy's expm_multiply works to double precision. The norm drift of the result must stay
    below tol, relaxed to the roundoff floor EXPM_ROUNDOFF_FACTOR * eps * (1 + |angle| ||A||_1).
    """
    if tol <= 0:
        raise ValueError(f"Rotation tolerance must be positive, got {tol}")

    result = np.array(vector, dtype=complex)
    scale = np.linalg.norm(result)
    if angle == 0 or scale == 0:
        return result

    generator = sp.csr_matrix(matrix, dtype=complex) * (-1j * angle)
    try:
        result = expm_multiply(generator, result, traceA=complex(generator.diagonal().sum()))
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"Matrix exponential failed for angle {angle!r}: {e}") from e
    if not np.all(np.isfinite(result)):
        raise ConvergenceError(f"Matrix exponential produced non-finite amplitudes for angle {angle!r}")

    floor = EXPM_ROUNDOFF_FACTOR * np.finfo(float).eps * (1.0 + abs(angle) * spla.norm(matrix, 1))
    drift = abs(np.linalg.norm(result) - scale) / scale
    if drift > max(tol, floor):
        raise ConvergenceError(f"Matrix exponential drifted by {drift:.3g}, cannot reach tol={tol}")

    log.debug("Applied exp(-i %.6g A) on dimension %d, norm drift %.3g", angle, len(result), drift)
    return result


def evolve(state: StateVector, op: CollectiveOperator, angle: float, tol: float = ROTATION_TOL) -> StateVector:
    """Return exp(-i angle op) |state> for a Hermitian collective operator."""
    _check_same_basis(state.basis, op.basis)
    if not op.hermitian:
        raise NonHermitianError(f"Evolution requires a Hermitian generator, got {op.kind}")

    if op.is_diagonal():
        amplitudes = np.exp(-1j * angle * op.matrix.diagonal()) * state.amplitudes
    else:
        amplitudes = expm_action(op.matrix, state.amplitudes, angle, tol=tol)

    drift = abs(np.linalg.norm(amplitudes) - 1.0)
    if drift > NORM_TOL:
        raise ConvergenceError(f"Evolution under {op.kind} changed the norm by {drift:.3g}")
    return StateVector(state.basis, amplitudes)


def apply_rotation(state: StateVector, axis: str, angle: float, tol: float = ROTATION_TOL) -> StateVector:
    """Return exp(-i angle J_axis) |state> for axis in {x, y, z}."""
    kinds = {"x": OperatorKind.JX, "y": OperatorKind.JY, "z": OperatorKind.JZ}
    if axis not in kinds:
        raise ValueError(f"Unknown rotation axis {axis!r}, expected one of x, y, z")
    return evolve(state, build_operator(state.basis, kinds[axis]), angle, tol=tol)

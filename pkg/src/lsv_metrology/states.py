"""
Probe states for estimating kappa.

Spin-1 states are built in the three-mode Fock space of fock_space. Two-branch
superpositions of generator eigenstates (NOON, twin-Fock superposition, paired
DFS states of higher spin) are kept analytically as CatState, which needs no
basis and works for any N and spin j.
"""

# SPDX-License-Identifier: Apache-2.0

import logging
import math
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
import pydantic
from scipy.special import gammaln, logsumexp

from lsv_metrology import NORMALIZED_INPUT_TOL
from lsv_metrology.fock_space import StateVector, enumerate_basis
from lsv_metrology.utils import SpinLike, parse_spin

log = logging.getLogger(__name__)

SQRT_HALF = math.sqrt(0.5)


class CatBranch(pydantic.BaseModel):
    """One branch of a cat state: an exact eigenstate of the generator."""

    model_config = pydantic.ConfigDict(frozen=True)

    eigenvalue: float
    label: str
    occupation: Optional[Tuple[int, int, int]] = None
    "Fock triple of the branch, only for spin-1 branches"


class CatState(pydantic.BaseModel):
    """Superposition w_a |branch_a> + w_b |branch_b> of two generator eigenstates.

    Eigenvalues are stored, never recomputed, so N and j are not limited by memory.
    """

    model_config = pydantic.ConfigDict(frozen=True, arbitrary_types_allowed=True)

    branch_a: CatBranch
    branch_b: CatBranch
    weights: Tuple[complex, complex] = (complex(SQRT_HALF), complex(SQRT_HALF))
    N: int = pydantic.Field(ge=1)
    j: float = pydantic.Field(ge=0)

    @pydantic.field_validator("weights", mode="before")
    @classmethod
    def _complex_weights(cls, value):
        first, second = value
        return complex(first), complex(second)

    @pydantic.field_validator("j", mode="before")
    @classmethod
    def _spin(cls, value):
        return float(parse_spin(value))

    @pydantic.model_validator(mode="after")
    def _normalized(self):
        total = abs(self.weights[0]) ** 2 + abs(self.weights[1]) ** 2
        if abs(total - 1.0) > NORMALIZED_INPUT_TOL:
            raise ValueError(f"Cat weights must satisfy |w_a|^2 + |w_b|^2 = 1, got {total!r}")
        return self

    @property
    def gap(self) -> float:
        return abs(self.branch_a.eigenvalue - self.branch_b.eigenvalue)

    def to_state_vector(self) -> StateVector:
        """Expand a spin-1 cat into the Fock basis."""
        if self.j != 1 or self.branch_a.occupation is None or self.branch_b.occupation is None:
            raise ValueError("Only spin-1 cat states with occupation triples can be expanded into a Fock basis")
        weights = {self.branch_a.occupation: self.weights[0]}
        weights[self.branch_b.occupation] = weights.get(self.branch_b.occupation, 0) + self.weights[1]
        return StateVector.from_occupations(self.N, weights)


def _check_even(N: int):
    if N < 2 or N % 2:
        raise ValueError(f"N must be even and at least 2, got {N}")


def dicke_log_weights(N: int) -> np.ndarray:
    """Return log(2^(N-2k) C(N,k) C(N-k,k)) for k = 0..N/2."""
    _check_even(N)
    k = np.arange(N // 2 + 1)
    return (N - 2 * k) * math.log(2.0) + gammaln(N + 1) - 2 * gammaln(k + 1) - gammaln(N - 2 * k + 1)


def dicke_probabilities(N: int) -> np.ndarray:
    """Return p_k of the balanced Dicke state on |k, N-2k, k>, without building a basis."""
    log_weights = dicke_log_weights(N)
    log_norm = logsumexp(log_weights)
    expected = gammaln(2 * N + 1) - 2 * gammaln(N + 1)
    if abs(log_norm - expected) > 1e-8 * max(1.0, expected):
        log.warning("Dicke normalization drifted for N=%d: %r vs. log C(2N,N)=%r", N, log_norm, expected)
    return np.exp(log_weights - log_norm)


def dicke_moments(N: int) -> Tuple[float, float]:
    """Return closed forms of <H> and Var(H) on the balanced Dicke state."""
    _check_even(N)
    mean = N * (N - 1) / (2 * N - 1)
    variance = 2.0 * N**2 * (N - 1) ** 2 / ((2 * N - 1) ** 2 * (2 * N - 3))
    return mean, variance


def dicke_balanced(N: int) -> StateVector:
    """Return the balanced spin-1 Dicke state with zero magnetization."""
    probabilities = dicke_probabilities(N)
    basis = enumerate_basis(N)
    k = np.arange(N // 2 + 1)
    amplitudes = np.zeros(len(basis), dtype=complex)
    amplitudes[basis.position(k, N - 2 * k)] = np.sqrt(probabilities)
    return StateVector(basis, amplitudes)


def noon_state(N: int) -> CatState:
    """Return (|m=1>^N + |m=0>^N)/sqrt(2); to_state_vector() gives the Fock vector."""
    if N < 1:
        raise ValueError(f"NOON state needs at least one particle, got N={N}")
    return CatState(
        branch_a=CatBranch(eigenvalue=N, label=f"|m=1>^{N}", occupation=(N, 0, 0)),
        branch_b=CatBranch(eigenvalue=0, label=f"|m=0>^{N}", occupation=(0, N, 0)),
        N=N,
        j=1,
    )


def twin_fock_superposition(N: int) -> CatState:
    """Return (|m=1>^(N/2) |m=-1>^(N/2) + |m=0>^N)/sqrt(2)."""
    _check_even(N)
    half = N // 2
    return CatState(
        branch_a=CatBranch(eigenvalue=N, label=f"|m=1>^{half}|m=-1>^{half}", occupation=(half, 0, half)),
        branch_b=CatBranch(eigenvalue=0, label=f"|m=0>^{N}", occupation=(0, N, 0)),
        N=N,
        j=1,
    )


def _check_magnetic(j: Fraction, m: Fraction, name: str):
    if abs(m) > j or (j - m).denominator != 1:
        raise ValueError(f"Invalid quantum number {name}={m} for spin j={j}")


def _pair_branch(N: int, j: Fraction, m: Fraction) -> CatBranch:
    count = N // 2
    if m == 0:
        occupation = (0, N, 0) if j == 1 else None
        return CatBranch(eigenvalue=0, label=f"|{j},0>^{N}", occupation=occupation)
    occupation = (count, 0, count) if j == 1 else None
    return CatBranch(
        eigenvalue=float(N * m * m),
        label=f"|{j},{m}>^{count}|{j},{-m}>^{count}",
        occupation=occupation,
    )


def paired_dfs_cat(
    N: int = 2,
    j: SpinLike = "7/2",
    m_hi: SpinLike = "7/2",
    m_lo: SpinLike = "1/2",
) -> CatState:
    """Return the superposition of N/2 pairs (m_hi, -m_hi) and N/2 pairs (m_lo, -m_lo).

    Each branch is immune to a uniform linear Zeeman shift and has eigenvalue N m^2.
    """
    _check_even(N)
    j, m_hi, m_lo = parse_spin(j), parse_spin(m_hi, signed=True), parse_spin(m_lo, signed=True)
    _check_magnetic(j, m_hi, "m_hi")
    _check_magnetic(j, m_lo, "m_lo")
    return CatState(branch_a=_pair_branch(N, j, m_hi), branch_b=_pair_branch(N, j, m_lo), N=N, j=j)


def single_ion_cat(j: SpinLike = "7/2", m_hi: SpinLike = "7/2", m_lo: SpinLike = "1/2") -> CatState:
    """Return (|j,m_hi> + |j,m_lo>)/sqrt(2) of a single particle."""
    j, m_hi, m_lo = parse_spin(j), parse_spin(m_hi, signed=True), parse_spin(m_lo, signed=True)
    _check_magnetic(j, m_hi, "m_hi")
    _check_magnetic(j, m_lo, "m_lo")
    return CatState(
        branch_a=CatBranch(eigenvalue=float(m_hi * m_hi), label=f"|{j},{m_hi}>"),
        branch_b=CatBranch(eigenvalue=float(m_lo * m_lo), label=f"|{j},{m_lo}>"),
        N=1,
        j=j,
    )


def product_state(N: int, single_amps: Tuple[complex, complex, complex]) -> StateVector:
    """Return the N-fold product of one spin-1 state with amplitudes (m=+1, m=0, m=-1)."""
    amps = np.asarray(single_amps, dtype=complex)
    if amps.shape != (3,):
        raise ValueError(f"Expected three single-particle amplitudes, got {single_amps!r}")
    norm = np.sum(np.abs(amps) ** 2)
    if abs(norm - 1.0) > NORMALIZED_INPUT_TOL:
        raise ValueError(f"Single-particle amplitudes are not normalized, squared norm is {norm!r}")

    basis = enumerate_basis(N)
    counts = (basis.n_plus, basis.n_zero, basis.n_minus)
    log_magnitude = 0.5 * (gammaln(N + 1) - sum(gammaln(n + 1) for n in counts))
    phase = np.zeros(len(basis))
    support = np.ones(len(basis), dtype=bool)
    for amplitude, n in zip(amps, counts):
        if amplitude == 0:
            support &= n == 0
            continue
        log_magnitude = log_magnitude + n * math.log(abs(amplitude))
        phase = phase + n * np.angle(amplitude)

    amplitudes = np.where(support, np.exp(log_magnitude + 1j * phase), 0)
    return StateVector(basis, amplitudes)

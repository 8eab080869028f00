"""Tests for the three-mode Fock space, collective operators and rotations."""

# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from lsv_metrology.errors import BasisMismatchError, ConvergenceError, NonHermitianError
from lsv_metrology.fock_space import (
    CollectiveOperator,
    OperatorKind,
    StateVector,
    apply_diagonal_phase,
    apply_rotation,
    build_operator,
    enumerate_basis,
    evolve,
    expectation,
    expm_action,
)
from lsv_metrology.states import dicke_balanced


def _random_state(N: int, seed: int = 7) -> StateVector:
    basis = enumerate_basis(N)
    rng = np.random.default_rng(seed)
    amplitudes = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    return StateVector(basis, amplitudes / np.linalg.norm(amplitudes))


def _dense_rotation(state: StateVector, kind: OperatorKind, angle: float) -> np.ndarray:
    matrix = build_operator(state.basis, kind).matrix.toarray()
    return scipy.linalg.expm(-1j * angle * matrix) @ state.amplitudes


def test_basis_sizes():
    for N in (0, 1, 2, 5, 20):
        basis = enumerate_basis(N)
        assert len(basis) == (N + 1) * (N + 2) // 2
        assert len(set(basis.states)) == len(basis)
        assert all(sum(state) == N and min(state) >= 0 for state in basis.states)


def test_basis_order_two_particles():
    assert enumerate_basis(2).states == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
    assert enumerate_basis(0).states == [(0, 0, 0)]


def test_basis_positions():
    basis = enumerate_basis(7)
    for position, state in enumerate(basis.states):
        assert basis.index[state] == position
        assert basis.position_of(state) == position
    assert list(basis.position(basis.n_plus, basis.n_zero)) == list(range(len(basis)))

    with pytest.raises(ValueError):
        basis.position_of((3, 3, 3))
    with pytest.raises(ValueError):
        enumerate_basis(-1)


def test_diagonal_operator_entries():
    basis = enumerate_basis(2)
    h = build_operator(basis, OperatorKind.H).matrix.toarray()
    jz = build_operator(basis, OperatorKind.JZ).matrix.toarray()
    position = basis.position_of((1, 0, 1))
    assert h[position, position] == 2
    assert jz[position, position] == 0

    basis = enumerate_basis(4)
    parity = build_operator(basis, "Parity0").matrix.toarray()
    position = basis.position_of((1, 2, 1))
    assert parity[position, position] == 1
    position = basis.position_of((2, 1, 1))
    assert parity[position, position] == -1


def test_operators_hermitian_and_cached():
    basis = enumerate_basis(6)
    for kind in OperatorKind:
        assert build_operator(basis, kind).hermitian
    assert build_operator(basis, OperatorKind.JX) is build_operator(basis, OperatorKind.JX)
    assert build_operator(basis, OperatorKind.H).is_diagonal()
    assert not build_operator(basis, OperatorKind.JX).is_diagonal()


def test_angular_momentum_algebra():
    for N in (1, 2, 5, 12, 20):
        basis = enumerate_basis(N)
        jx = build_operator(basis, OperatorKind.JX)
        jy = build_operator(basis, OperatorKind.JY)
        jz = build_operator(basis, OperatorKind.JZ)
        h = build_operator(basis, OperatorKind.H)

        residual = (jx.commutator(jy).matrix - 1j * jz.matrix).toarray()
        assert np.max(np.abs(residual)) < 1e-12
        assert np.max(np.abs(h.commutator(jz).matrix.toarray())) < 1e-12


def test_single_particle_matrices():
    basis = enumerate_basis(1)
    jx = build_operator(basis, OperatorKind.JX).matrix.toarray()
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / math.sqrt(2)
    assert np.allclose(jx, expected, atol=1e-15)


def test_entries_listing():
    basis = enumerate_basis(1)
    entries = build_operator(basis, OperatorKind.JZ).entries()
    assert sorted(entries) == [(0, 0, 1 + 0j), (2, 2, -1 + 0j)]


def test_state_vector_validation():
    basis = enumerate_basis(2)
    with pytest.raises(ValueError, match="not normalized"):
        StateVector(basis, np.ones(len(basis)))
    with pytest.raises(ValueError):
        StateVector(basis, np.ones(3))

    state = StateVector.from_occupations(2, {(1, 0, 1): 1.0})
    assert state.amplitude((1, 0, 1)) == 1
    assert state.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        state.amplitudes[0] = 1.0


def test_expectation_values():
    assert expectation(StateVector.from_occupations(3, {(0, 3, 0): 1}), build_operator(enumerate_basis(3), "H")) == 0
    assert expectation(StateVector.from_occupations(3, {(3, 0, 0): 1}), build_operator(enumerate_basis(3), "H")) == 3
    superposition = StateVector.from_occupations(2, {(1, 0, 1): math.sqrt(2 / 3), (0, 2, 0): math.sqrt(1 / 3)})
    assert expectation(superposition, build_operator(enumerate_basis(2), "H")) == pytest.approx(4 / 3)


def test_expectation_basis_mismatch():
    state = StateVector.from_occupations(2, {(0, 2, 0): 1})
    with pytest.raises(BasisMismatchError):
        expectation(state, build_operator(enumerate_basis(3), OperatorKind.H))


def test_expectation_rejects_non_hermitian():
    basis = enumerate_basis(1)
    matrix = sp.csr_matrix(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))
    operator = CollectiveOperator.from_matrix(basis, matrix)
    assert not operator.hermitian
    with pytest.raises(NonHermitianError):
        expectation(StateVector.from_occupations(1, {(0, 1, 0): 1}), operator)
    with pytest.raises(NonHermitianError):
        evolve(StateVector.from_occupations(1, {(0, 1, 0): 1}), operator, 0.1)


def test_diagonal_phase():
    state = StateVector.from_occupations(2, {(1, 0, 1): math.sqrt(0.5), (0, 2, 0): math.sqrt(0.5)})
    assert np.allclose(apply_diagonal_phase(state, 0.0).amplitudes, state.amplitudes)

    shifted = apply_diagonal_phase(state, 0.3)
    assert shifted.amplitude((1, 0, 1)) == pytest.approx(math.sqrt(0.5) * np.exp(-0.6j))
    assert shifted.amplitude((0, 2, 0)) == pytest.approx(math.sqrt(0.5))
    assert shifted.norm() == pytest.approx(1.0, abs=1e-12)


def test_rotation_matches_dense_exponential():
    for N in range(1, 7):
        state = _random_state(N, seed=N)
        for axis, kind in (("x", OperatorKind.JX), ("y", OperatorKind.JY), ("z", OperatorKind.JZ)):
            for angle in (0.37, -1.2, math.pi):
                rotated = apply_rotation(state, axis, angle)
                assert np.max(np.abs(rotated.amplitudes - _dense_rotation(state, kind, angle))) < 1e-9


def test_rotation_of_large_dicke_states():
    for N in (18, 20, 60):
        state = dicke_balanced(N)
        rotated = apply_rotation(state, "x", math.pi / 2)
        assert rotated.norm() == pytest.approx(1.0, abs=1e-10)

        jy = build_operator(state.basis, OperatorKind.JY).matrix
        jz = build_operator(state.basis, OperatorKind.JZ).matrix
        before = expectation(state, CollectiveOperator.from_matrix(state.basis, jy @ jy))
        after = expectation(rotated, CollectiveOperator.from_matrix(state.basis, jz @ jz))
        assert after == pytest.approx(before, rel=1e-9)


def test_rotation_of_dicke_state_matches_dense_exponential():
    for N in (18, 20):
        state = dicke_balanced(N)
        rotated = apply_rotation(state, "x", math.pi / 2)
        assert np.max(np.abs(rotated.amplitudes - _dense_rotation(state, OperatorKind.JX, math.pi / 2))) < 1e-9


def test_expm_action_failures_are_convergence_errors(monkeypatch):
    def _fail(*args, **kwargs):
        raise np.linalg.LinAlgError("did not converge")

    state = _random_state(3)
    matrix = build_operator(state.basis, OperatorKind.JX).matrix
    monkeypatch.setattr("lsv_metrology.fock_space.expm_multiply", _fail)
    with pytest.raises(ConvergenceError, match="did not converge"):
        expm_action(matrix, state.amplitudes, 0.5)


def test_expm_action_rejects_non_finite_results(monkeypatch):
    state = _random_state(3)
    matrix = build_operator(state.basis, OperatorKind.JX).matrix
    monkeypatch.setattr("lsv_metrology.fock_space.expm_multiply", lambda a, v, **kwargs: v * np.nan)
    with pytest.raises(ConvergenceError, match="non-finite"):
        expm_action(matrix, state.amplitudes, 0.5)


def test_operator_matrices_are_read_only():
    basis = enumerate_basis(3)
    operator = build_operator(basis, OperatorKind.JX)
    for array in (operator.matrix.data, operator.matrix.indices, operator.matrix.indptr):
        with pytest.raises(ValueError):
            array[0] = array[0]
    assert build_operator(basis, OperatorKind.JX) is operator


def test_full_turn_is_identity():
    # integer total spin, so exp(-i 2 pi J) = 1
    state = _random_state(4)
    for axis in ("x", "y"):
        rotated = apply_rotation(state, axis, 2 * math.pi)
        assert np.max(np.abs(rotated.amplitudes - state.amplitudes)) < 1e-10


def test_quarter_turn_about_x_maps_jy_to_jz():
    state = _random_state(5)
    rotated = apply_rotation(state, "x", math.pi / 2)
    before = expectation(state, build_operator(state.basis, OperatorKind.JY))
    after = expectation(rotated, build_operator(state.basis, OperatorKind.JZ))
    assert after == pytest.approx(before, abs=1e-10)


def test_rotation_preserves_norm_and_casimir():
    state = _random_state(8)
    rotated = apply_rotation(apply_rotation(state, "y", 0.9), "x", -2.1)
    assert rotated.norm() == pytest.approx(1.0, abs=1e-10)

    axes = (OperatorKind.JX, OperatorKind.JY, OperatorKind.JZ)
    components = [build_operator(state.basis, kind).matrix for kind in axes]
    casimir = CollectiveOperator.from_matrix(state.basis, sum(m @ m for m in components))
    assert expectation(rotated, casimir) == pytest.approx(expectation(state, casimir), rel=1e-10)


def test_rotation_arguments():
    state = _random_state(2)
    with pytest.raises(ValueError, match="axis"):
        apply_rotation(state, "w", 0.1)
    with pytest.raises(ValueError, match="tolerance"):
        apply_rotation(state, "x", 0.1, tol=0)
    assert np.allclose(apply_rotation(state, "x", 0.0).amplitudes, state.amplitudes)


def test_beam_splitter_evolution_matches_dense():
    state = _random_state(6)
    evolved = evolve(state, build_operator(state.basis, OperatorKind.BX10), math.pi / 2)
    assert np.max(np.abs(evolved.amplitudes - _dense_rotation(state, OperatorKind.BX10, math.pi / 2))) < 1e-9

#!/usr/bin/env python3
"""Tests for the truncated Fock basis, CM operators and initial states"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from cbrlab.errors import InvalidStateError, TruncationWarning, ValidationError
from cbrlab.physics.fock_algebra import (
    DensityMatrix,
    ModelParams,
    StateVector,
    annihilation_matrix,
    cm_operators,
    coherent_state,
    free_cm_hamiltonian,
    superposition_state,
    thermal_state,
)
from cbrlab.physics.phys_units import ENGINE


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70 + "\n")


def test_model_params_validation():
    print_section("ModelParams validation")
    params = ModelParams(N=1e23, m=1e-23, omega=1e9, Lambda=1e-38, T=3.0)
    assert params.M == pytest.approx(1.0)
    assert params.tau_c == pytest.approx(0.05 / 1e9)
    assert params.damping == pytest.approx(1e-15)
    with pytest.raises(ValidationError) as info:
        ModelParams(N=0.5, m=1.0, omega=1.0)
    assert info.value.field == "N"
    with pytest.raises(ValidationError):
        ModelParams(N=10, m=1.0, omega=1.0, M=11.0)
    with pytest.raises(ValidationError):
        ModelParams(N=1, m=1.0, omega=1.0, dims=2)
    with pytest.raises(ValidationError):
        ModelParams(N=1, m=1.0, omega=1.0, Lambda=-1.0)
    with pytest.raises(ValidationError):
        ModelParams(N=1, m=1.0, omega=1.0, T=math.inf)


def test_annihilation_commutator():
    b = annihilation_matrix(10).entries
    comm = b @ b.conj().T - b.conj().T @ b
    expected = np.eye(10)
    expected[-1, -1] = -9.0
    assert_allclose(comm, expected, atol=1e-12)


def test_canonical_commutator_away_from_edge():
    print_section("[Q, P] = iħ")
    params = ModelParams.engine(N=4, Lambda=0.01)
    ops = cm_operators(params, 30)
    Q, P = ops.Q.entries, ops.P.entries
    comm = Q @ P - P @ Q
    assert_allclose(comm[:-1, :-1], 1j * params.hbar * np.eye(29), atol=1e-12)
    assert ops.Q.is_hermitian() and ops.P.is_hermitian()


def test_collective_operator_matches_definition():
    params = ModelParams(N=5, m=2.0, omega=3.0, constants=ENGINE)
    ops = cm_operators(params, 12)
    hbar, m, omega, N = params.hbar, params.m, params.omega, params.N
    X = (N * m * omega * ops.Q.entries + 1j * ops.P.entries) / math.sqrt(2 * hbar * m * omega)
    assert_allclose(X, ops.X.entries, atol=1e-12)
    XXd = ops.X.entries @ ops.X.entries.conj().T - ops.X.entries.conj().T @ ops.X.entries
    assert_allclose(np.diag(XXd)[:-1], N, atol=1e-12)


def test_free_hamiltonian_is_hermitian():
    params = ModelParams.engine(N=4, Lambda=0.01)
    H = free_cm_hamiltonian(params, 20)
    assert H.is_hermitian()
    # ⟨0|P²/2M|0⟩ = ħmωN/4M = ħω/4 in one dimension
    assert H.entries[0, 0].real == pytest.approx(0.25)


def test_coherent_state():
    print_section("Coherent state")
    psi = coherent_state(1.0 + 0.5j, 40)
    b = annihilation_matrix(40)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.projector().expectation(b) == pytest.approx(1.0, abs=1e-10)
    vacuum = coherent_state(0.0, 8)
    assert vacuum.amplitudes[0] == 1.0


def test_truncation_warning():
    with pytest.warns(TruncationWarning):
        coherent_state(3.0, 10)


def test_thermal_state_occupation():
    rho = thermal_state(0.5, 60).check()
    n = np.diag(np.arange(60)).astype(complex)
    assert rho.expectation(n) == pytest.approx(0.5, rel=1e-10)
    assert thermal_state(0.0, 5).entries[0, 0] == 1.0
    with pytest.raises(ValidationError):
        thermal_state(-1.0, 5)


def test_superposition_state_lobes():
    print_section("Cat state")
    params = ModelParams.engine(N=1, Lambda=0.0)
    rho = superposition_state(0.0, 6.0, 40, params).projector().check()
    ops = cm_operators(params, 40)
    q_zero2 = params.hbar / (2.0 * params.m * params.omega * params.N)
    assert rho.expectation(ops.Q) == pytest.approx(0.0, abs=1e-10)
    assert rho.expectation(ops.Q.entries @ ops.Q.entries) == pytest.approx(9.0 + q_zero2, rel=1e-3)


def test_state_invariants():
    with pytest.raises(InvalidStateError):
        StateVector(np.array([1.0, 1.0]))
    raw = StateVector(np.array([1.0, 1.0]), physical=False)
    assert raw.norm() == pytest.approx(math.sqrt(2.0))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.5, -0.5])).check()
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[0.5, 0.1], [0.3, 0.5]])).check()
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([0.5, 0.4])).check()


if __name__ == "__main__":
    test_model_params_validation()
    test_annihilation_commutator()
    test_canonical_commutator_away_from_edge()
    test_collective_operator_matches_definition()
    test_free_hamiltonian_is_hermitian()
    test_coherent_state()
    test_truncation_warning()
    test_thermal_state_occupation()
    test_superposition_state_lobes()
    test_state_invariants()
    print_section("fock_algebra tests complete")

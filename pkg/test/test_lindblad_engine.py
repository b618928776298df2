#!/usr/bin/env python3
"""Tests for the master-equation engine against the closed-form moments"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from cbrlab.errors import DomainError, InvalidStateError, ValidationError
from cbrlab.physics.analytic_oracles import (
    InitialMoments,
    entropy_poly,
    entropy_rate,
    equilibrium_kinetic,
    first_moments,
    kinetic_energy,
    moment_rhs,
    second_moments,
)
from cbrlab.physics.fock_algebra import (
    DensityMatrix,
    ModelParams,
    OperatorMatrix,
    annihilation_matrix,
    coherent_state,
)
from cbrlab.physics.lindblad_engine import (
    LindbladGenerator,
    build_generator,
    build_joint_generator,
    ehrenfest_rate,
    evolve_master,
    joint_initial_state,
    linear_entropy,
    moment_observables,
    partial_trace,
    purity,
    trace_distance,
    von_neumann_entropy,
)

D = 40


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70 + "\n")


def random_density(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = A @ A.conj().T
    return DensityMatrix(rho / np.trace(rho))


def random_generator(rng, d, rate=0.4):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = 0.5 * (A + A.conj().T)
    c = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(d)
    fastest = max(np.linalg.norm(H, 2), rate * np.linalg.norm(c, 2) ** 2)
    return LindbladGenerator(
        H=OperatorMatrix(H, "H"),
        jump_ops=((OperatorMatrix(c, "c"), rate),),
        fastest_rate=fastest,
    )


def relative_error(numeric, oracle, floor):
    return float(np.max(np.abs(numeric - oracle)) / max(np.max(np.abs(oracle)), floor))


def test_generator_is_trace_free():
    print_section("tr 𝓛ρ = 0 and 𝓛ρ Hermitian")
    rng = np.random.default_rng(11)
    for d in (3, 6, 10):
        gen = random_generator(rng, d)
        out = gen.apply(random_density(rng, d).entries)
        assert abs(np.trace(out)) < 1e-12
        assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_liouvillian_matches_apply():
    rng = np.random.default_rng(3)
    gen = random_generator(rng, 5)
    rho = random_density(rng, 5).entries
    vec = gen.liouvillian() @ rho.flatten(order="F")
    assert_allclose(vec.reshape(5, 5, order="F"), gen.apply(rho), atol=1e-12)


def test_rk4_matches_matrix_exponential():
    print_section("RK4 vs exp(𝓛t)")
    rng = np.random.default_rng(5)
    gen = random_generator(rng, 5)
    rho0 = random_density(rng, 5)
    record = evolve_master(gen, rho0, [0.0, 0.5, 1.0])
    for t, state in zip(record.times, record.states):
        exact = (expm(gen.liouvillian() * t) @ rho0.entries.flatten(order="F")).reshape(5, 5, order="F")
        print(f"t={t}: max|diff|={np.max(np.abs(state.entries - exact)):.3e}")
        assert_allclose(state.entries, exact, atol=1e-9)


def test_unitary_limit_keeps_purity():
    params = ModelParams.engine(N=4, Lambda=0.0)
    gen = build_generator(params, 30)
    assert gen.scaled_jumps == ()
    rho0 = coherent_state(1.0, 30).projector()
    record = evolve_master(gen, rho0, [0.0, 1.0, 2.0])
    assert_allclose(record.series("purity"), 1.0, atol=1e-10)
    assert_allclose(record.series("S_l"), 0.0, atol=1e-10)


def test_vacuum_is_stationary_under_pure_damping():
    d = 12
    gen = LindbladGenerator(
        H=OperatorMatrix(np.zeros((d, d)), "0"),
        jump_ops=((annihilation_matrix(d), 1.0),),
    )
    vacuum = coherent_state(0.0, d).projector()
    record = evolve_master(gen, vacuum, [0.0, 1.0, 5.0])
    assert trace_distance(record.final, vacuum) < 1e-14


def test_evolve_rejects_bad_inputs():
    params = ModelParams.engine(N=4, Lambda=0.25)
    gen = build_generator(params, 20)
    rho0 = coherent_state(0.5, 20).projector()
    with pytest.raises(ValidationError) as info:
        evolve_master(gen, rho0, [0.0, 1.0], dt=0.1)
    assert info.value.field == "dt"
    with pytest.raises(ValidationError):
        evolve_master(gen, rho0, [0.0, 1.0], stepper="euler")
    with pytest.raises(ValidationError):
        evolve_master(gen, rho0, [1.0, 0.5])
    with pytest.raises(DomainError):
        evolve_master(gen, coherent_state(0.5, 10).projector(), [0.0, 1.0])


@pytest.mark.parametrize("nbar", [0.0, 0.5])
def test_moments_match_closed_forms(nbar):
    print_section(f"Moment suite, nbar={nbar}")
    params = ModelParams.engine(N=4, Lambda=0.25, nbar=nbar)
    observables = moment_observables(params, D)
    times = np.linspace(0.0, 3.0, 21)
    record = evolve_master(build_generator(params, D), coherent_state(1.0, D).projector(), times,
                           observables=observables)

    init = InitialMoments.coherent(1.0, params)
    Q, P = first_moments(times, params, init)
    Q2, QP, P2 = second_moments(times, params, init)
    q_zero2 = params.hbar / (2.0 * params.m * params.omega * params.N)
    p_zero2 = params.hbar * params.m * params.omega * params.N / 2.0
    cases = {
        "Q": (Q, math.sqrt(q_zero2)),
        "P": (P, math.sqrt(p_zero2)),
        "Q2": (Q2, q_zero2),
        "QP": (QP, params.hbar),
        "P2": (P2, p_zero2),
    }
    for name, (oracle, floor) in cases.items():
        error = relative_error(record.series(name), oracle, floor)
        print(f"{name:<3} relative error {error:.2e}")
        assert error <= 1e-3, name


def test_kinetic_energy_thermalizes():
    print_section("Thermalization of ⟨K⟩")
    params = ModelParams.engine(N=4, Lambda=0.5, nbar=0.5)
    init = InitialMoments.coherent(1j, params)
    assert init.P0 == pytest.approx(2.0 * math.sqrt(2.0))
    assert init.P2_0 / (2.0 * params.M) == pytest.approx(1.25)
    assert equilibrium_kinetic(params) == pytest.approx(0.5)

    times = np.linspace(0.0, 4.0, 41)
    record = evolve_master(build_generator(params, D), coherent_state(1j, D).projector(), times,
                           observables=moment_observables(params, D))
    K = record.series("K")
    oracle = kinetic_energy(times, params, init)
    assert relative_error(K, oracle, 0.5) <= 1e-3
    # K - K_eq decays exactly as e^{-NΛt}
    excess = K - equilibrium_kinetic(params)
    assert excess[10] / excess[0] == pytest.approx(math.exp(-params.damping * times[10]), rel=1e-3)


def test_ehrenfest_rates_match_moment_equations():
    params = ModelParams.engine(N=4, Lambda=0.25, nbar=0.5)
    d = 30
    alpha = 0.5 + 0.3j
    gen = build_generator(params, d)
    rho = coherent_state(alpha, d).projector()
    observables = moment_observables(params, d)
    init = InitialMoments.coherent(alpha, params)
    expected = moment_rhs(params, (init.Q0, init.P0, init.Q2_0, init.QP_0, init.P2_0))
    rates = [ehrenfest_rate(gen, rho, observables[name]) for name in ("Q", "P", "Q2", "QP", "P2")]
    assert_allclose(rates, expected, rtol=1e-8, atol=1e-10)
    with pytest.raises(DomainError):
        ehrenfest_rate(gen, rho, OperatorMatrix(np.eye(5), "I"))


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(2)
    a, b = random_density(rng, 4), random_density(rng, 3)
    joint = DensityMatrix(np.kron(a.entries, b.entries))
    assert_allclose(partial_trace(joint, 4, 3, keep="cm").entries, a.entries, atol=1e-14)
    assert_allclose(partial_trace(joint, 4, 3, keep="cbr").entries, b.entries, atol=1e-14)
    with pytest.raises(DomainError):
        partial_trace(joint, 3, 3)
    with pytest.raises(ValidationError):
        partial_trace(joint, 4, 3, keep="both")


def test_entropy_measures():
    pure = coherent_state(0.7, 10).projector()
    assert purity(pure) == pytest.approx(1.0, abs=1e-12)
    assert linear_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(pure) == pytest.approx(0.0, abs=1e-10)
    mixed = DensityMatrix(np.eye(6) / 6.0)
    assert linear_entropy(mixed) == pytest.approx(1.0 - 1.0 / 6.0)
    assert von_neumann_entropy(mixed) == pytest.approx(math.log(6.0))
    e0 = DensityMatrix(np.diag([1.0, 0.0, 0.0]))
    e1 = DensityMatrix(np.diag([0.0, 1.0, 0.0]))
    assert trace_distance(e0, e1) == pytest.approx(1.0)


def test_entropies_reject_negative_eigenvalues():
    invalid = DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        linear_entropy(invalid)
    with pytest.raises(InvalidStateError):
        von_neumann_entropy(invalid)


def test_joint_model_agrees_to_first_order():
    print_section("Joint CM ⊗ CBR model vs reduced generator")
    params = ModelParams.engine(N=1, Lambda=0.1)
    d_cm, d_cbr = 16, 8
    rho_cm = coherent_state(0.5, d_cm).projector()
    joint = build_joint_generator(params, d_cm, d_cbr)
    reduced = build_generator(params, d_cm)
    rho_joint = joint_initial_state(rho_cm, params, d_cbr)

    errors = []
    for lambda_t in (1e-3, 5e-4, 2.5e-4):
        t = lambda_t / params.Lambda
        a = evolve_master(joint, rho_joint, [0.0, t], dt=1e-4).final
        b = evolve_master(reduced, rho_cm, [0.0, t], dt=1e-4).final
        errors.append(trace_distance(partial_trace(a, d_cm, d_cbr), b))
    exponents = [math.log(errors[k] / errors[k + 1], 2.0) for k in range(2)]
    print(f"errors {errors}, exponents {exponents}")
    assert all(p >= 1.7 for p in exponents)


def test_joint_dimension_limit():
    params = ModelParams.engine(N=1, Lambda=0.1)
    with pytest.raises(DomainError):
        build_joint_generator(params, 1024, 8)
    with pytest.raises(ValidationError):
        build_joint_generator(params, 16, 1)


def test_entropy_rate_of_pure_state():
    print_section("Initial linear-entropy rate")
    params = ModelParams.engine(N=1, Lambda=1e-5, nbar=100.0)
    d = 20
    rho = coherent_state(0.0, d).projector()
    gen = build_generator(params, d)
    # dS_l/dt = -2 tr(ρ 𝓛ρ)
    numeric = -2.0 * float(np.real(np.einsum("ij,ji->", rho.entries, gen.apply(rho.entries))))
    half = params.hbar / 2.0
    variances = (half, half, 0.0)
    assert numeric == pytest.approx(entropy_rate(params, variances, include_drift=True), rel=1e-10)
    # without the drift term the rate is high by 1/(1 + 2n̄)
    assert numeric == pytest.approx(entropy_rate(params, variances), rel=1e-2)


def test_linear_entropy_follows_cubic():
    print_section("Linear entropy along free spreading")
    params = ModelParams.engine(N=1, Lambda=1e-5, nbar=50.0)
    d = 50
    times = np.linspace(0.0, 3.0, 7)
    record = evolve_master(build_generator(params, d), coherent_state(0.0, d).projector(), times)
    oracle = entropy_poly(times, params, InitialMoments.coherent(0.0, params), include_drift=True)
    print(np.column_stack([times, record.series("S_l"), oracle]))
    assert_allclose(record.series("S_l")[1:], oracle[1:], rtol=2e-2)


if __name__ == "__main__":
    test_generator_is_trace_free()
    test_liouvillian_matches_apply()
    test_rk4_matches_matrix_exponential()
    test_unitary_limit_keeps_purity()
    test_vacuum_is_stationary_under_pure_damping()
    test_evolve_rejects_bad_inputs()
    test_moments_match_closed_forms(0.0)
    test_moments_match_closed_forms(0.5)
    test_kinetic_energy_thermalizes()
    test_ehrenfest_rates_match_moment_equations()
    test_partial_trace_of_product_state()
    test_entropy_measures()
    test_joint_model_agrees_to_first_order()
    test_joint_dimension_limit()
    test_entropy_rate_of_pure_state()
    test_linear_entropy_follows_cubic()
    print_section("lindblad_engine tests complete")

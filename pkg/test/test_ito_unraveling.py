#!/usr/bin/env python3
"""Tests for the raw Itô unraveling and its trajectory ensembles"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from cbrlab.errors import ValidationError
from cbrlab.physics.fock_algebra import ModelParams, OperatorMatrix, coherent_state
from cbrlab.physics.ito_unraveling import (
    WienerConfig,
    euler_maruyama_mean,
    philox_generator,
    physical_weighting_check,
    run_ensemble,
    step_raw,
    trajectory_seed,
)
from cbrlab.physics.lindblad_engine import build_generator, evolve_master, trace_distance

SEED = 20240917


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70 + "\n")


def vacuum_params():
    return ModelParams.engine(N=4, Lambda=0.25)


def test_trajectory_seed_is_splitmix64():
    # first splitmix64 output for state 0
    assert trajectory_seed(0, 0) == 0xE220A8397B1DCDAF
    seeds = {trajectory_seed(SEED, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert trajectory_seed(SEED, 7) == trajectory_seed(SEED, 7)
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_wiener_config_validation():
    params = vacuum_params()
    cfg = WienerConfig.for_params(params, SEED)
    assert cfg.dt == pytest.approx(0.01)
    assert cfg.Lambda == 0.25
    with pytest.raises(ValidationError):
        WienerConfig(Lambda=0.1, dt=0.01, master_seed=-1)
    with pytest.raises(ValidationError):
        WienerConfig(Lambda=0.1, dt=0.0, master_seed=1)
    with pytest.raises(ValidationError):
        WienerConfig(Lambda=-0.1, dt=0.01, master_seed=1)


def test_step_raw_without_noise_is_schrodinger_euler():
    d = 10
    psi = coherent_state(0.5, d)
    H = OperatorMatrix(np.diag(np.arange(d, dtype=float)), "H")
    X = OperatorMatrix(np.zeros((d, d)), "X")
    cfg = WienerConfig(Lambda=0.0, dt=0.01, master_seed=1)
    out = step_raw(psi, X, H, cfg, philox_generator(1))
    assert not out.physical
    assert_allclose(out.amplitudes, psi.amplitudes - 0.01j * (H.entries @ psi.amplitudes), atol=1e-15)


def test_run_ensemble_rejects_bad_inputs():
    params = vacuum_params()
    psi0 = coherent_state(0.5, 20)
    cfg = WienerConfig.for_params(params, SEED)
    with pytest.raises(ValidationError):
        run_ensemble(params, psi0, 50, [0.0, 0.1], cfg)
    with pytest.raises(ValidationError):
        run_ensemble(params, psi0, 100, [0.0, 0.1], WienerConfig.for_params(params, SEED, dt=0.05))


def test_ensemble_is_reproducible_across_workers():
    print_section("Reproducibility")
    params = vacuum_params()
    psi0 = coherent_state(0.5, 20)
    cfg = WienerConfig.for_params(params, SEED, batch_size=50)
    times = [0.0, 0.25, 0.5]
    a = run_ensemble(params, psi0, 200, times, cfg, workers=1)
    b = run_ensemble(params, psi0, 200, times, cfg, workers=3)
    assert_array_equal(a.seeds, b.seeds)
    assert_array_equal(a.norms2, b.norms2)
    assert_array_equal(a.raw_mean, b.raw_mean)
    c = run_ensemble(params, psi0, 200, times, WienerConfig.for_params(params, SEED + 1, batch_size=50))
    assert not np.array_equal(a.norms2, c.norms2)


def test_physical_weighting_identity():
    params = vacuum_params()
    ensemble = run_ensemble(params, coherent_state(1.0, 30), 100, [0.0, 0.5, 1.0],
                            WienerConfig.for_params(params, SEED))
    report = physical_weighting_check(ensemble)
    print(report)
    assert report.passed
    assert report.min_weight > 0
    no_states = run_ensemble(params, coherent_state(1.0, 30), 100, [0.0, 0.5],
                             WienerConfig.for_params(params, SEED), keep_states=False)
    with pytest.raises(ValidationError):
        physical_weighting_check(no_states)


def test_mean_norm_is_a_martingale():
    print_section("E‖ψ‖² = 1")
    params = vacuum_params()
    ensemble = run_ensemble(params, coherent_state(0.5, 30), 2000, np.linspace(0.0, 1.0, 6),
                            WienerConfig.for_params(params, SEED), keep_states=False)
    mean, err = ensemble.mean_norm2()
    z = np.abs(mean[1:] - 1.0) / err[1:]
    print(f"mean ‖ψ‖² {mean}, z-scores {z}")
    assert mean[0] == pytest.approx(1.0)
    assert z[-1] <= 3.0
    assert np.all(z <= 4.0)


def test_euler_maruyama_bias_is_first_order():
    print_section("Weak order of the Euler-Maruyama mean")
    params = vacuum_params()
    d = 30
    rho0 = coherent_state(1.0, d).projector()
    times = [0.0, 1.0]
    exact = evolve_master(build_generator(params, d), rho0, times).final
    errors = [trace_distance(euler_maruyama_mean(params, rho0, times, dt)[-1], exact)
              for dt in (0.01, 0.005, 0.0025)]
    exponents = [math.log(errors[k] / errors[k + 1], 2.0) for k in range(2)]
    print(f"errors {errors}, exponents {exponents}")
    assert all(0.7 <= p <= 1.3 for p in exponents)


@pytest.mark.slow
def test_ensemble_reconstructs_master_equation():
    print_section("Ensemble vs master equation at T = 0")
    params = vacuum_params()
    d = 40
    psi0 = coherent_state(1.0, d)
    times = np.linspace(0.0, 1.0, 11)
    ensemble = run_ensemble(params, psi0, 2000, times, WienerConfig.for_params(params, SEED),
                            keep_states=False)
    record = evolve_master(build_generator(params, d), psi0.projector(), times)
    distances = [trace_distance(a, b) for a, b in zip(ensemble.reconstruction, record.states)]
    print(f"trace distances {np.round(distances, 4)}")
    assert ensemble.resampled == 0
    assert max(distances) <= 0.05


if __name__ == "__main__":
    test_trajectory_seed_is_splitmix64()
    test_wiener_config_validation()
    test_step_raw_without_noise_is_schrodinger_euler()
    test_run_ensemble_rejects_bad_inputs()
    test_ensemble_is_reproducible_across_workers()
    test_physical_weighting_identity()
    test_mean_norm_is_a_martingale()
    test_euler_maruyama_bias_is_first_order()
    test_ensemble_reconstructs_master_equation()
    print_section("ito_unraveling tests complete")

#!/usr/bin/env python3
"""Tests for the GRWP/CSL comparison numbers"""

import math
import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from cbrlab.errors import ValidationError
from cbrlab.physics.analytic_oracles import InitialMoments
from cbrlab.physics.fock_algebra import ModelParams
from cbrlab.physics.grwp_baseline import (
    CslParams,
    csl_energy_rate,
    csl_F,
    csl_F_macroscopic,
    csl_spreading,
    delta_i,
    lambda_cm,
    macro_frequency,
    momentum_growth_comparison,
    qmsl_density_eigenvalue,
)


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70 + "\n")


def one_gram_body():
    return ModelParams(N=1e23, m=1e-23, omega=1e9, Lambda=1e-38, T=3.0)


def test_grwp_parameters():
    print_section("GRWP reference values")
    csl = CslParams.grwp()
    assert csl.width == pytest.approx(1e-5)
    assert csl.lambda_micro == pytest.approx(1e-30 * (1e10 / (4.0 * math.pi)) ** 1.5)
    assert delta_i(csl) == pytest.approx(5.64e52, rel=1e-3)
    assert lambda_cm(1e23, 1e-16) == pytest.approx(1e7)
    assert macro_frequency(csl, 1e6) == pytest.approx(1.0)
    assert macro_frequency(csl, 0.0) == 0.0


def test_csl_params_validation():
    with pytest.raises(ValidationError):
        CslParams(alpha=-1.0, zeta=1e-30, D0=1e24)
    with pytest.raises(ValidationError) as info:
        CslParams(alpha=1e10, zeta=1e-30, D0=1e24, lambda_micro=1e-16)
    assert info.value.field == "lambda_micro"
    with pytest.raises(ValidationError):
        lambda_cm(0.0, 1e-16)
    with pytest.raises(ValidationError):
        macro_frequency(CslParams.grwp(), -1.0)


def test_energy_rate_of_one_gram_body():
    rate = csl_energy_rate(CslParams.grwp(), 1.0)
    print(f"dE/dt = {rate:.3e} erg/s")
    assert rate == pytest.approx(6.27e-32, rel=1e-3)


def test_density_eigenvalue_and_F():
    alpha = 2.0
    norm = (alpha / (2.0 * math.pi)) ** 1.5
    assert qmsl_density_eigenvalue([0.0, 0.0, 0.0], [[0.0, 0.0, 0.0]], alpha) == pytest.approx(norm)
    assert qmsl_density_eigenvalue([0.0, 0.0, 0.0], [], alpha) == 0.0
    positions = [[0.3, 0.0, 0.0], [-0.2, 0.1, 0.4]]
    x = [0.1, 0.2, -0.1]
    # F(Q - x) with offsets q̃ = q - Q equals n_x for the same configuration
    Q = np.array([0.05, -0.05, 0.2])
    offsets = np.array(positions) - Q
    assert csl_F(Q - np.array(x), offsets, alpha) == pytest.approx(qmsl_density_eigenvalue(x, positions, alpha))


def test_F_of_uniform_block():
    print_section("F for a uniform block")
    bounds = [(-10.0, 10.0)] * 3
    inside = csl_F_macroscopic([0.0, 0.0, 0.0], lambda *y: 2.0, 1.0, bounds=bounds, epsrel=1e-6)
    face = csl_F_macroscopic([-10.0, 0.0, 0.0], lambda *y: 2.0, 1.0, bounds=bounds, epsrel=1e-6)
    outside = csl_F_macroscopic([-30.0, 0.0, 0.0], lambda *y: 2.0, 1.0, bounds=bounds)
    print(f"inside {inside:.8f}, face {face:.8f}, outside {outside}")
    assert inside == pytest.approx(2.0, rel=1e-5)
    assert face == pytest.approx(1.0, rel=1e-5)
    assert outside == 0.0
    with pytest.raises(ValidationError):
        csl_F_macroscopic([0.0, 0.0], lambda *y: 1.0, 1.0)


def test_csl_spreading():
    csl = CslParams.grwp()
    kick = csl.zeta * delta_i(csl) * 1.0546e-27 ** 2
    t = np.array([0.0, 1e10, 2e10])
    Q2, P2 = csl_spreading(t, csl, 1.0, (1.0, 2.0))
    assert_allclose(Q2, 1.0 + kick * t ** 3 / 6.0, rtol=1e-12)
    assert_allclose(P2, 2.0 + kick * t / 2.0, rtol=1e-12)
    with pytest.raises(ValidationError):
        csl_spreading(-1.0, csl, 1.0, (1.0, 2.0))


def test_momentum_growth_comparison():
    print_section("CSL heating vs CBR relaxation")
    params = one_gram_body()
    init = InitialMoments.coherent(0.0, params)
    times = np.linspace(0.0, 1e17, 101)
    report = momentum_growth_comparison(times, CslParams.grwp(), params, init)
    for note in report.notes:
        print(note)
    assert report.qualitative_difference
    assert report.cbr_P2[-1] == pytest.approx(report.cbr_limit, rel=1e-9)
    assert np.all(np.diff(report.csl_P2) > 0)
    assert report.crossing_time == pytest.approx(1.4e16, rel=1e-9)


def test_no_coupling_means_no_qualitative_difference():
    params = ModelParams(N=1e23, m=1e-23, omega=1e9, Lambda=0.0, T=3.0)
    init = InitialMoments.coherent(0.0, params)
    report = momentum_growth_comparison([0.0, 1e16], CslParams.grwp(), params, init)
    assert not report.qualitative_difference
    assert report.cbr_P2[0] == pytest.approx(report.cbr_P2[-1])


if __name__ == "__main__":
    test_grwp_parameters()
    test_csl_params_validation()
    test_energy_rate_of_one_gram_body()
    test_density_eigenvalue_and_F()
    test_F_of_uniform_block()
    test_csl_spreading()
    test_momentum_growth_comparison()
    test_no_coupling_means_no_qualitative_difference()
    print_section("grwp_baseline tests complete")

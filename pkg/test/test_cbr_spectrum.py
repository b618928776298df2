#!/usr/bin/env python3
"""Tests for the CBR spectrum, Planck occupation and the temperature integral"""

import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path
parent_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, parent_dir)

from cbrlab.errors import DomainError, RegimeError, ValidationError
from cbrlab.physics.cbr_spectrum import (
    LorentzianSpectrum,
    ThermalParams,
    contour_sum,
    integral_I_approx,
    integral_I_quadrature,
    integral_I_residue,
    lorentzian_density,
    lorentzian_normalization,
    planck_occupation,
    residue_tail_bound,
    temperature_for_occupation,
)
from cbrlab.physics.phys_units import CGS, ENGINE

# (xi, p) points with xi/p <= 0.05 and xi <= 1
RESIDUE_GRID = [(xi, factor * xi) for xi in (0.01, 0.05, 0.2, 1.0) for factor in (20.0, 50.0)]


def print_section(title):
    print("\n" + "=" * 70)
    print(f"  {title}")
    print("=" * 70 + "\n")


def quadrature(p, xi):
    # ħ = ω = k_B = 1: T = 1/p, τ_c = ξ
    return integral_I_quadrature(LorentzianSpectrum(1.0, xi), 1.0 / p, constants=ENGINE)


def test_lorentzian_is_normalized():
    for tau_c in (0.05, 1.0, 20.0):
        spec = LorentzianSpectrum(omega_center=1.0, tau_c=tau_c)
        assert lorentzian_normalization(spec) == pytest.approx(1.0, abs=1e-10)


def test_lorentzian_peak_value():
    spec = LorentzianSpectrum(omega_center=2.0, tau_c=3.0)
    assert lorentzian_density(2.0, spec) == pytest.approx(3.0 / math.pi)
    values = lorentzian_density(np.array([1.0, 3.0]), spec)
    assert values[0] == pytest.approx(values[1])
    assert spec.xi == 6.0


def test_spectrum_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        LorentzianSpectrum(omega_center=0.0, tau_c=1.0)
    with pytest.raises(ValidationError):
        LorentzianSpectrum(omega_center=1.0, tau_c=-1.0)
    with pytest.raises(ValidationError):
        ThermalParams(p=1.0, xi=0.1, gamma_ratio=3.0)


def test_planck_occupation():
    print_section("Planck occupation")
    assert planck_occupation(1.0, 1.0 / math.log(2.0), ENGINE) == pytest.approx(1.0, rel=1e-14)
    assert planck_occupation(1.0, 0.0, ENGINE) == 0.0
    # deep quantum regime underflows to zero instead of overflowing
    assert planck_occupation(1e9, 1e-6, CGS) == 0.0
    with pytest.raises(DomainError):
        planck_occupation(0.0, 3.0)
    with pytest.raises(DomainError):
        planck_occupation(1.0, -1.0)


def test_temperature_for_occupation_inverts_planck():
    for nbar in (0.5, 2.0, 100.0):
        T = temperature_for_occupation(nbar, 1e9)
        assert planck_occupation(1e9, T) == pytest.approx(nbar, rel=1e-12)
    assert temperature_for_occupation(0.0, 1.0, ENGINE) == 0.0


def test_integral_at_zero_temperature():
    print_section("I at T = 0")
    for xi in (0.05, 0.5, 5.0):
        value = integral_I_quadrature(LorentzianSpectrum(1.0, xi), 0.0, constants=ENGINE)
        print(f"xi={xi}: I={value:.12f}")
        assert value == pytest.approx(2.0 / math.pi * math.atan(xi), rel=1e-8)


def test_integral_grows_with_temperature():
    values = [quadrature(p, 0.5) for p in (20.0, 5.0, 1.0, 0.2)]
    print(values)
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_narrow_line_limit():
    # Γ much narrower than ω: I -> 1 + 2n(ω)
    for p in (0.5, 1.0, 3.0):
        exact = quadrature(p, 1000.0)
        assert exact == pytest.approx(integral_I_approx(1.0, 1.0 / p, ENGINE), rel=1e-2)


def test_residue_matches_quadrature():
    print_section("Residue series vs quadrature")
    for xi, p in RESIDUE_GRID:
        residue = integral_I_residue(ThermalParams(p=p, xi=xi))
        quad = quadrature(p, xi)
        print(f"xi={xi:<5} p={p:<6} residue={residue:.12g} quadrature={quad:.12g}")
        assert abs(residue - quad) <= 1e-5 * abs(quad)


def test_thermal_params_from_spectrum():
    spec = LorentzianSpectrum(omega_center=1e11, tau_c=1e-12)
    tp = ThermalParams.from_spectrum(spec, 3.0)
    assert tp.p == pytest.approx(CGS.hbar * 1e11 / (CGS.k_B * 3.0))
    assert tp.xi == pytest.approx(0.1)
    assert ThermalParams.from_spectrum(LorentzianSpectrum(1.0, 0.05), 0.5, ENGINE).p == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        ThermalParams.from_spectrum(spec, 0.0)


def test_contour_sum_is_real_when_converged():
    total = contour_sum(ThermalParams(p=4.0, xi=0.2))
    assert abs(total.imag) < 1e-10


def test_residue_refuses_wide_lines():
    with pytest.raises(RegimeError):
        integral_I_residue(ThermalParams(p=0.5, xi=1.0))


def test_tail_bound_envelopes_truncation_error():
    print_section("Residue tail bound")
    tp = ThermalParams(p=10.0, xi=0.1)
    assert tp.gamma_ratio == pytest.approx(100.0)
    truncated = integral_I_residue(tp, n_terms=1000, tail=False)
    complete = integral_I_residue(tp, n_terms=1000, tail=True)
    bound = residue_tail_bound(tp, 1000)
    print(f"truncation error {abs(complete - truncated):.3e}, bound {bound:.3e}")
    assert abs(complete - truncated) <= 1.01 * bound
    assert abs(complete - truncated) >= 0.5 * bound


def test_tail_estimate_matches_long_series():
    tp = ThermalParams(p=4.0, xi=0.2)
    short = integral_I_residue(tp, n_terms=200, tail=True)
    long = integral_I_residue(tp, n_terms=20_000, tail=True)
    assert short == pytest.approx(long, rel=1e-10)


if __name__ == "__main__":
    test_lorentzian_is_normalized()
    test_lorentzian_peak_value()
    test_spectrum_rejects_bad_parameters()
    test_planck_occupation()
    test_temperature_for_occupation_inverts_planck()
    test_integral_at_zero_temperature()
    test_integral_grows_with_temperature()
    test_narrow_line_limit()
    test_residue_matches_quadrature()
    test_thermal_params_from_spectrum()
    test_contour_sum_is_real_when_converged()
    test_residue_refuses_wide_lines()
    test_tail_bound_envelopes_truncation_error()
    test_tail_estimate_matches_long_series()
    print_section("cbr_spectrum tests complete")

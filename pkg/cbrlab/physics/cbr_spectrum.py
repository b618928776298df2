# cbrlab/physics/cbr_spectrum.py
"""CBR spectral density, Planck occupation and the temperature integral I.

I is the principal value over the whole frequency axis

    I = PV ∫ Γ(Ω) coth(ħΩ / 2k_BT) dΩ = 1 + 2 PV ∫ Γ(Ω) n(Ω) dΩ,

with n(Ω) = 1/(exp(ħΩ/k_BT) - 1) continued to negative Ω. Three
evaluations are provided: adaptive quadrature, the residue (contour) series
and the narrow-line approximation 1 + 2 n(ω).

Everything below works in the reduced variable x = Ω τ_c, in which the
Lorentzian is (1/π) / ((x - ξ)² + 1) with ξ = ω τ_c and the Bose factor is
1/(exp(γ x) - 1) with γ = ħ / (k_B T τ_c).
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import zeta

from cbrlab.errors import DomainError, NumericalError, RegimeError, ValidationError
from cbrlab.physics.phys_units import CGS, PhysicalConstants

# Configure logging
logger = logging.getLogger(__name__)

# Markovian default for ω τ_c
DEFAULT_XI = 0.05

# exp(x) overflows past this; occupation is zero to double precision anyway
_EXP_LIMIT = 700.0


def _require_positive(name: str, value: float):
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(name, f"must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class LorentzianSpectrum:
    """Effective frequency distribution of the CBR photons seen by the CM."""
    omega_center: float
    tau_c: float

    def __post_init__(self):
        _require_positive("omega_center", self.omega_center)
        _require_positive("tau_c", self.tau_c)

    @property
    def xi(self) -> float:
        return self.omega_center * self.tau_c

    def density(self, Omega):
        return lorentzian_density(Omega, self)


@dataclass(frozen=True)
class ThermalParams:
    """Dimensionless inputs of the residue series.

    p = ħω/k_BT, xi = ωτ_c and gamma_ratio = p/xi. gamma_ratio is derived
    when omitted and checked when given.
    """
    p: float
    xi: float
    gamma_ratio: Optional[float] = field(default=None)

    def __post_init__(self):
        _require_positive("p", self.p)
        _require_positive("xi", self.xi)
        expected = self.p / self.xi
        if self.gamma_ratio is None:
            object.__setattr__(self, "gamma_ratio", expected)
        elif abs(self.gamma_ratio - expected) > 1e-12 * expected:
            raise ValidationError("gamma_ratio", f"{self.gamma_ratio!r} != p/xi = {expected!r}")

    @classmethod
    def from_spectrum(cls, spec: LorentzianSpectrum, T: float,
                      constants: PhysicalConstants = CGS) -> "ThermalParams":
        _require_positive("T", T)
        p = constants.hbar * spec.omega_center / (constants.k_B * T)
        return cls(p=p, xi=spec.xi)


def lorentzian_density(Omega, spec: LorentzianSpectrum):
    """Γ(Ω) = (1/π) τ_c / (τ_c² (Ω - ω)² + 1)."""
    Omega = np.asarray(Omega, dtype=float)
    value = (spec.tau_c / math.pi) / ((spec.tau_c * (Omega - spec.omega_center)) ** 2 + 1.0)
    return float(value) if value.ndim == 0 else value


def lorentzian_normalization(spec: LorentzianSpectrum) -> float:
    """∫Γ(Ω)dΩ over the real line, computed with Ω = ω + tan(θ)/τ_c."""
    def integrand(theta):
        Omega = spec.omega_center + math.tan(theta) / spec.tau_c
        return lorentzian_density(Omega, spec) / (spec.tau_c * math.cos(theta) ** 2)

    value, _ = integrate.quad(integrand, -math.pi / 2, math.pi / 2, epsabs=1e-13, epsrel=1e-12)
    return value


def planck_occupation(Omega, T: float, constants: PhysicalConstants = CGS):
    """Thermal photon number 1/(exp(ħΩ/k_BT) - 1).

    Raises:
        DomainError: Omega <= 0 (Planck divergence) or T < 0
    """
    Omega = np.asarray(Omega, dtype=float)
    if np.any(Omega <= 0) or not np.all(np.isfinite(Omega)):
        raise DomainError(f"planck_occupation needs Omega > 0, got {Omega!r}")
    if not math.isfinite(T) or T < 0:
        raise DomainError(f"planck_occupation needs T >= 0, got {T!r}")
    if T == 0:
        occupation = np.zeros_like(Omega)
    else:
        x = constants.hbar * Omega / (constants.k_B * T)
        with np.errstate(over="ignore"):
            occupation = np.where(x > _EXP_LIMIT, 0.0, 1.0 / np.expm1(np.minimum(x, _EXP_LIMIT)))
    return float(occupation) if occupation.ndim == 0 else occupation


def temperature_for_occupation(nbar: float, omega: float,
                               constants: PhysicalConstants = CGS) -> float:
    """Temperature at which planck_occupation(omega, T) equals nbar."""
    if not math.isfinite(nbar) or nbar < 0:
        raise ValidationError("nbar", f"must be finite and >= 0, got {nbar!r}")
    if nbar == 0:
        return 0.0
    return constants.hbar * omega / (constants.k_B * math.log1p(1.0 / nbar))


def integral_I_approx(omega: float, T: float, constants: PhysicalConstants = CGS) -> float:
    """Narrow-line value 1 + 2 n(ω)."""
    return 1.0 + 2.0 * planck_occupation(omega, T, constants)


def _odd_part_integrand(x: float, xi: float, gamma: float) -> float:
    # (Γ(x) - Γ(-x)) coth(γx/2), regular at x = 0
    if gamma == 0.0:
        x_coth = x
    elif gamma * x < 2e-8:
        x_coth = 2.0 / gamma
    else:
        x_coth = x / math.tanh(0.5 * gamma * x)
    return (4.0 * xi / math.pi) * x_coth / (((x - xi) ** 2 + 1.0) * ((x + xi) ** 2 + 1.0))


def integral_I_quadrature(spec: LorentzianSpectrum, T: float, omega_min: Optional[float] = None,
                          tol: float = 1e-10, constants: PhysicalConstants = CGS,
                          limit: int = 200) -> float:
    """Evaluate I by adaptive quadrature.

    The whole-axis principal value is folded onto Ω > 0 where the
    integrand (Γ(Ω) - Γ(-Ω)) coth(ħΩ/2k_BT) stays finite at Ω = 0. The
    interval [0, omega_min] is integrated as its own piece so the region
    where the Bose factor diverges is resolved separately.

    Args:
        spec: Lorentzian spectrum (ω, τ_c)
        T: Temperature, 0 allowed
        omega_min: Small-frequency breakpoint, defaults to ω/100
        tol: Absolute error target
        constants: Units of ħ and k_B matching spec and T
        limit: Subinterval budget per piece

    Returns:
        The value of I

    Raises:
        NumericalError: the error estimate exceeds tol
    """
    if omega_min is None:
        omega_min = spec.omega_center / 100.0
    _require_positive("omega_min", omega_min)
    _require_positive("tol", tol)
    if not math.isfinite(T) or T < 0:
        raise ValidationError("T", f"must be finite and >= 0, got {T!r}")

    xi = spec.xi
    gamma = 0.0 if T == 0 else constants.hbar / (constants.k_B * T * spec.tau_c)
    x_min = omega_min * spec.tau_c
    breaks = [0.0, x_min]
    if xi > x_min:
        breaks.append(xi)
    pieces = list(zip(breaks[:-1], breaks[1:])) + [(breaks[-1], math.inf)]

    total, error = 0.0, 0.0
    for lo, hi in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            result = integrate.quad(
                _odd_part_integrand, lo, hi, args=(xi, gamma),
                epsabs=tol / len(pieces), epsrel=1e-12, limit=limit, full_output=1,
            )
        value, abserr = result[0], result[1]
        if len(result) > 3:
            logger.debug(f"quad on [{lo}, {hi}] reported: {result[3]}")
        total += value
        error += abserr

    if error > max(tol, 64 * np.finfo(float).eps * abs(total)):
        raise NumericalError("quadrature of I did not converge", best_estimate=total, error_bound=error)
    logger.debug(f"I quadrature: xi={xi}, gamma={gamma}, value={total}, err={error}")
    return total


def _term_and_derivatives(K: int, a: complex, c: float):
    """f(K), f'(K), f'''(K), f^(5)(K) for f(k) = 1/((a - ick)(ā - ick))."""
    ab = a.conjugate()
    ic = 1j * c
    out = []
    for n in (0, 1, 3, 5):
        ga = math.factorial(n) * ic ** n / (a - ic * K) ** (n + 1)
        gb = math.factorial(n) * ic ** n / (ab - ic * K) ** (n + 1)
        out.append((ga - gb) / (ab - a))
    return out


def _series_tail(tp: ThermalParams, n_terms: int) -> complex:
    """Σ_{k > n_terms} 1/((1+ξ²-ν_k²) - 2iξν_k) by Euler-Maclaurin with closed forms."""
    a = complex(tp.xi, 1.0)
    c = 2.0 * math.pi / tp.gamma_ratio
    K = n_terms
    integral = (np.log(a - 1j * c * K) - np.log(a.conjugate() - 1j * c * K)) / (2.0 * c)
    f0, f1, f3, f5 = _term_and_derivatives(K, a, c)
    return complex(integral - f0 / 2.0 - f1 / 12.0 + f3 / 720.0 - f5 / 30240.0)


def contour_sum(tp: ThermalParams, n_terms: int = 10_000, tail: bool = True) -> complex:
    """PV ∫Γ n dx as the sum of residues in the upper half plane.

    The Lorentzian pole at x = ξ + i contributes n(ξ + i); the Bose poles
    at x = iν_k, ν_k = 2πk/γ, contribute (2i/γ)/((1+ξ²-ν_k²) - 2iξν_k) and the
    pole on the real axis contributes half its residue. The sum is
    accumulated in descending magnitude with compensated summation.
    """
    if n_terms < 1:
        raise ValidationError("n_terms", f"must be >= 1, got {n_terms!r}")
    xi, gamma = tp.xi, tp.gamma_ratio
    if tp.p > _EXP_LIMIT:
        lorentz_pole = 0.0j
    else:
        lorentz_pole = 1.0 / (math.exp(tp.p) * complex(math.cos(gamma), math.sin(gamma)) - 1.0)

    nu = 2.0 * math.pi * np.arange(1, n_terms + 1) / gamma
    terms = 1.0 / ((1.0 + xi * xi - nu * nu) - 2j * xi * nu)
    terms = terms[np.argsort(-np.abs(terms), kind="stable")]
    series = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if tail:
        series += _series_tail(tp, n_terms)

    return lorentz_pole + (2j / gamma) * (0.5 / (1.0 + xi * xi) + series)


def residue_tail_bound(tp: ThermalParams, n_terms: int) -> float:
    """Envelope of |I(series truncated at n_terms) - I| from the 1/k³ decay.

    Meaningful once ν at n_terms is well past the resonance (ν ≫ 1).
    """
    xi, gamma = tp.xi, tp.gamma_ratio
    scale = gamma / (2.0 * math.pi)
    return 2.0 * (4.0 * xi / gamma) * scale ** 3 * float(zeta(3.0, n_terms + 1))


def integral_I_residue(tp: ThermalParams, n_terms: int = 10_000, tail: bool = True) -> float:
    """Evaluate I = 1 + 2 Re(contour_sum) in the regime ξ/p < 1.

    Raises:
        RegimeError: ξ/p >= 1
    """
    if tp.xi / tp.p >= 1.0:
        raise RegimeError(f"residue series needs xi/p < 1, got xi={tp.xi}, p={tp.p}")
    total = contour_sum(tp, n_terms, tail=tail)
    if tail and abs(total.imag) > 1e-10:
        logger.warning(f"Imaginary part of contour sum is {total.imag:.3e} (p={tp.p}, xi={tp.xi}, "
                       f"n_terms={n_terms}); series not converged")
    return 1.0 + 2.0 * total.real

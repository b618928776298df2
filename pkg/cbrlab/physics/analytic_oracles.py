# cbrlab/physics/analytic_oracles.py
"""Closed-form moment dynamics, thermalization, decoherence and entropy.

All functions accept CGS or engine-unit parameters; ħ and k_B come from
params.constants. ``dims`` multiplies the temperature-driven terms: 1 for
the one-dimensional engines, 3 for the vector formulas. With dims = 3 the
initial moments are totals over the three components. The temperature
integral I defaults to the narrow-line value 1 + 2n̄ and can be overridden.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from cbrlab.errors import DomainError, ValidationError
from cbrlab.physics.fock_algebra import DensityMatrix, ModelParams, OperatorMatrix

# Configure logging
logger = logging.getLogger(__name__)

# Caldeira-Leggett decoherence time for the 1 g, 1 cm, τ_R = 1e16 s example [s]
CALDEIRA_LEGGETT_TAU_D = 1e-23

_H_SERIES_TERMS = 14


class Regime(str, Enum):
    GENERAL = "general"
    LOW_FREQUENCY = "low_frequency"


@dataclass(frozen=True)
class InitialMoments:
    """⟨Q⟩, ⟨P⟩, ⟨Q²⟩, ⟨P²⟩ and ⟨{Q,P}⟩ at t = 0."""
    Q0: float
    P0: float
    Q2_0: float
    P2_0: float
    QP_0: float

    def __post_init__(self):
        for name in ("Q0", "P0", "Q2_0", "P2_0", "QP_0"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.var_Q < -1e-12 * max(self.Q2_0, 1e-300):
            raise ValidationError("Q2_0", f"variance {self.var_Q!r} is negative")
        if self.var_P < -1e-12 * max(self.P2_0, 1e-300):
            raise ValidationError("P2_0", f"variance {self.var_P!r} is negative")

    @property
    def var_Q(self) -> float:
        return self.Q2_0 - self.Q0 ** 2

    @property
    def var_P(self) -> float:
        return self.P2_0 - self.P0 ** 2

    @property
    def cov_QP(self) -> float:
        """½⟨{ΔQ, ΔP}⟩."""
        return 0.5 * self.QP_0 - self.Q0 * self.P0

    def check_uncertainty(self, hbar: float) -> "InitialMoments":
        """Robertson-Schrödinger bound var_Q var_P - cov² >= ħ²/4."""
        det = self.var_Q * self.var_P - self.cov_QP ** 2
        bound = 0.25 * hbar ** 2
        if det < bound * (1.0 - 1e-10):
            raise ValidationError("InitialMoments", f"uncertainty product {det!r} below ħ²/4 = {bound!r}")
        return self

    @classmethod
    def coherent(cls, alpha: complex, params: ModelParams) -> "InitialMoments":
        """Moments of the coherent state |α⟩ of the CM mode."""
        alpha = complex(alpha)
        q_zero = math.sqrt(params.hbar / (2.0 * params.m * params.omega * params.N))
        p_zero = math.sqrt(params.hbar * params.m * params.omega * params.N / 2.0)
        Q0 = 2.0 * q_zero * alpha.real
        P0 = 2.0 * p_zero * alpha.imag
        return cls(Q0=Q0, P0=P0, Q2_0=Q0 ** 2 + q_zero ** 2, P2_0=P0 ** 2 + p_zero ** 2, QP_0=2.0 * Q0 * P0)

    @classmethod
    def from_density(cls, rho: DensityMatrix, observables: Dict[str, OperatorMatrix]) -> "InitialMoments":
        """Moments of ρ using the operators from moment_observables()."""
        values = {name: rho.expectation(observables[name]) for name in ("Q", "P", "Q2", "P2", "QP")}
        return cls(Q0=values["Q"], P0=values["P"], Q2_0=values["Q2"], P2_0=values["P2"], QP_0=values["QP"])


@dataclass(frozen=True)
class DecoherenceQuery:
    params: ModelParams
    deltaQ: float
    regime: Regime = Regime.GENERAL

    def __post_init__(self):
        if not math.isfinite(self.deltaQ) or self.deltaQ <= 0:
            raise ValidationError("deltaQ", f"must be finite and positive, got {self.deltaQ!r}")
        object.__setattr__(self, "regime", Regime(self.regime))


def _dims(params: ModelParams, dims: Optional[int]) -> int:
    dims = params.dims if dims is None else dims
    if dims not in (1, 3):
        raise ValidationError("dims", f"must be 1 or 3, got {dims!r}")
    return dims


def _thermal(params: ModelParams, I: Optional[float]) -> float:
    return params.thermal_factor if I is None else I


def _h(x):
    """(1 - e^{-x} - x e^{-x}) / x², with its Taylor series near 0."""
    x = np.asarray(x, dtype=float)
    small = x < 0.5
    safe = np.where(small, 1.0, x)
    direct = (-np.expm1(-safe) - safe * np.exp(-safe)) / safe ** 2
    series = np.zeros_like(x)
    for k in range(_H_SERIES_TERMS + 1, 1, -1):
        series = series * x + (-1) ** k * (k - 1) / math.factorial(k)
    return np.where(small, series, direct)


def first_moments(t, params: ModelParams, init: InitialMoments) -> Tuple[np.ndarray, np.ndarray]:
    """⟨Q⟩ and ⟨P⟩ at time(s) t."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-0.5 * params.damping * t)
    return decay * (init.Q0 + init.P0 * t / params.M), decay * init.P0


def schrodinger_moments(t, params: ModelParams, init: InitialMoments):
    """Free-particle second moments (⟨Q²⟩_s, ⟨{Q,P}⟩_s, ⟨P²⟩_s)."""
    t = np.asarray(t, dtype=float)
    M = params.M
    Q2 = init.Q2_0 + init.QP_0 * t / M + init.P2_0 * t ** 2 / M ** 2
    QP = init.QP_0 + 2.0 * init.P2_0 * t / M
    return Q2, QP, np.full_like(t, init.P2_0)


def second_moments(t, params: ModelParams, init: InitialMoments, dims: Optional[int] = None,
                   I: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """⟨Q²⟩, ⟨{Q,P}⟩ and ⟨P²⟩ at time(s) t.

    With γ = NΛ and E = e^{-γt}:

        ⟨P²⟩    = ⟨P²⟩₀ E + dims (N m ħ ω I / 2)(1 - E)
        ⟨{Q,P}⟩ = ⟨{Q,P}⟩_s E - dims ħωI [t E - (1 - E)/γ]
        ⟨Q²⟩    = ⟨Q²⟩_s E - dims (ħωI/M)[(t/γ)(1 + γt/2)E - (1/γ² + 1/2ω²)(1 - E)]

    evaluated through a form that stays finite as γ → 0.
    """
    dims = _dims(params, dims)
    I = _thermal(params, I)
    t = np.asarray(t, dtype=float)
    gamma, M, omega, hbar = params.damping, params.M, params.omega, params.hbar
    E = np.exp(-gamma * t)
    one_minus_E = -np.expm1(-gamma * t)
    g = t ** 2 * _h(gamma * t)  # ((1 - E)/γ - tE)/γ

    Q2_s, QP_s, P2_s = schrodinger_moments(t, params, init)
    P2 = P2_s * E + dims * 0.5 * params.N * params.m * hbar * omega * I * one_minus_E
    QP = QP_s * E + dims * hbar * omega * I * gamma * g
    Q2 = Q2_s * E + dims * (hbar * omega * I / M) * (g - 0.5 * t ** 2 * E + one_minus_E / (2.0 * omega ** 2))
    return Q2, QP, P2


def moment_rhs(params: ModelParams, moments, dims: Optional[int] = None,
               I: Optional[float] = None) -> np.ndarray:
    """Time derivatives of (⟨Q⟩, ⟨P⟩, ⟨Q²⟩, ⟨{Q,P}⟩, ⟨P²⟩)."""
    dims = _dims(params, dims)
    I = _thermal(params, I)
    Q, P, Q2, QP, P2 = moments
    gamma, M, m, omega, hbar, N = params.damping, params.M, params.m, params.omega, params.hbar, params.N
    return np.array([
        P / M - 0.5 * gamma * Q,
        -0.5 * gamma * P,
        QP / M - gamma * Q2 + dims * hbar * params.Lambda * I / (2.0 * m * omega),
        2.0 * P2 / M - gamma * QP,
        -gamma * P2 + dims * N ** 2 * params.Lambda * m * hbar * omega * I / 2.0,
    ])


def equilibrium_kinetic(params: ModelParams, dims: Optional[int] = None, I: Optional[float] = None) -> float:
    """K_eq = dims · I ħω / 4."""
    return _dims(params, dims) * _thermal(params, I) * params.hbar * params.omega / 4.0


def kinetic_energy(t, params: ModelParams, init: InitialMoments, dims: Optional[int] = None,
                   I: Optional[float] = None) -> np.ndarray:
    """⟨K⟩ = (K_s - K_eq) e^{-NΛt} + K_eq."""
    K_s = init.P2_0 / (2.0 * params.M)
    K_eq = equilibrium_kinetic(params, dims, I)
    t = np.asarray(t, dtype=float)
    return (K_s - K_eq) * np.exp(-params.damping * t) + K_eq


def estimate_lambda(N: float, tau_R: float, K_s: float, K_eq: float) -> float:
    """Coupling strength from a relaxation time: ln((K_s - K_eq)/K_eq)/(N τ_R).

    Raises:
        DomainError: K_s <= K_eq (system already thermalized) or non-positive inputs
    """
    if tau_R <= 0 or K_eq <= 0 or N <= 0:
        raise DomainError(f"estimate_lambda needs N, tau_R, K_eq > 0 (got {N}, {tau_R}, {K_eq})")
    if K_s <= K_eq:
        raise DomainError(f"K_s={K_s} <= K_eq={K_eq}: nothing left to relax")
    return math.log((K_s - K_eq) / K_eq) / (N * tau_R)


def diffusion_constant(params: ModelParams, I: Optional[float] = None) -> float:
    """𝓓 = N M Λ ω I / (4ħ), the (Q - Q')² coefficient."""
    return params.N * params.M * params.Lambda * params.omega * _thermal(params, I) / (4.0 * params.hbar)


def offdiag_decay_rate(params: ModelParams, deltaQ: float) -> float:
    """ζ = 𝓓 ΔQ²."""
    return diffusion_constant(params) * deltaQ ** 2


def decoherence_time(query: DecoherenceQuery) -> float:
    """Decay time of spatial coherence across ΔQ.

    The general form is 1/(𝓓ΔQ²). The low-frequency form
    ħ²/(2NΛMk_BT ΔQ²) is evaluated as written; it is 1/4 of the general
    form with 1 + 2n̄ replaced by its asymptote 2k_BT/ħω.
    """
    params = query.params
    dq2 = query.deltaQ ** 2
    if query.regime is Regime.GENERAL:
        rate = diffusion_constant(params) * dq2
        return math.inf if rate == 0 else 1.0 / rate
    denominator = 2.0 * params.N * params.Lambda * params.M * params.constants.k_B * params.T * dq2
    return math.inf if denominator == 0 else params.hbar ** 2 / denominator


def entropy_rate(params: ModelParams, variances: Tuple[float, float, float], dims: Optional[int] = None,
                 include_drift: bool = False) -> float:
    """Linear-entropy production 4𝓓(⟨ΔQ²⟩ + ⟨ΔP²⟩/(Nmω)²) of a nearly pure state.

    include_drift adds the -NΛ per dimension that the first-order
    expression leaves out; with it the rate is exact for pure states.
    """
    var_Q, var_P, _cov = variances
    if var_Q < 0 or var_P < 0:
        raise ValidationError("variances", f"must be >= 0, got {variances!r}")
    scale = params.N * params.m * params.omega
    rate = 4.0 * diffusion_constant(params) * (var_Q + var_P / scale ** 2)
    if include_drift:
        rate -= _dims(params, dims) * params.damping
    return rate


def position_entropy_rate(params: ModelParams, var_Q: float) -> float:
    """4𝓓⟨ΔQ²⟩, the rate when momentum fluctuations are ignored."""
    return 4.0 * diffusion_constant(params) * var_Q


def momentum_share(params: ModelParams, variances: Tuple[float, float, float]) -> float:
    """Ratio of the momentum term to the position term of entropy_rate."""
    var_Q, var_P, _cov = variances
    return var_P / (params.N * params.m * params.omega) ** 2 / var_Q


def entropy_poly(t, params: ModelParams, init: InitialMoments, dims: Optional[int] = None,
                 include_drift: bool = False) -> np.ndarray:
    """Weak-coupling linear entropy along the free evolution.

    S_l = 4𝓓[(σ_Q² + σ_P²/(Nmω)²) t + ⟨Δ{Q,P}⟩ t²/(2M) + σ_P² t³/(3M²)]
    with ⟨Δ{Q,P}⟩ = ⟨{Q,P}⟩ - 2⟨Q⟩⟨P⟩.
    """
    t = np.asarray(t, dtype=float)
    M = params.M
    scale = params.N * params.m * params.omega
    var_Q, var_P = init.var_Q, init.var_P
    anticommutator = init.QP_0 - 2.0 * init.Q0 * init.P0
    S = 4.0 * diffusion_constant(params) * (
        (var_Q + var_P / scale ** 2) * t + anticommutator * t ** 2 / (2.0 * M) + var_P * t ** 3 / (3.0 * M ** 2)
    )
    if include_drift:
        S = S - _dims(params, dims) * params.damping * t
    return S

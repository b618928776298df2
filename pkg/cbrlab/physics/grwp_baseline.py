# cbrlab/physics/grwp_baseline.py
"""GRWP/CSL comparison calculators in CGS units.

Only the closed forms the comparison needs: localization eigenvalues, the
F function, reduction frequencies, spreading and the heating rate. There is
no hitting-process simulation.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from cbrlab.errors import NumericalError, ValidationError
from cbrlab.physics.analytic_oracles import InitialMoments, second_moments
from cbrlab.physics.fock_algebra import ModelParams
from cbrlab.physics.phys_units import CGS

# Configure logging
logger = logging.getLogger(__name__)

# Gaussian kernel box half-width in units of α^{-1/2}
KERNEL_WIDTHS = 8.0

LAMBDA_REL_TOL = 1e-10


@dataclass(frozen=True)
class CslParams:
    """Localization parameters of the collapse baseline.

    Args:
        alpha: inverse squared localization width [1/cm²]
        zeta: strength [cm³/s]
        D0: particle density [1/cm³]
        S_i: cross-section of the body transverse to axis i [cm²]
        n: number of particles in the body
        lambda_micro: single-particle rate [1/s]; derived from ζ and α when omitted
    """
    alpha: float
    zeta: float
    D0: float
    S_i: float = 1.0
    n: float = 1
    lambda_micro: Optional[float] = None

    def __post_init__(self):
        for name in ("alpha", "zeta", "D0", "S_i", "n"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(name, f"must be finite and positive, got {value!r}")
        expected = self.zeta * (self.alpha / (4.0 * math.pi)) ** 1.5
        if self.lambda_micro is None:
            object.__setattr__(self, "lambda_micro", expected)
        elif abs(self.lambda_micro - expected) > LAMBDA_REL_TOL * expected:
            raise ValidationError(
                "lambda_micro", f"{self.lambda_micro!r} inconsistent with ζ(α/4π)^3/2 = {expected!r}"
            )

    @classmethod
    def grwp(cls, S_i: float = 1.0, n: float = 1) -> "CslParams":
        """α^{-1/2} = 1e-5 cm, ζ = 1e-30 cm³/s, D₀ = 1e24 cm⁻³."""
        return cls(alpha=1e10, zeta=1e-30, D0=1e24, S_i=S_i, n=n)

    @property
    def width(self) -> float:
        return self.alpha ** -0.5


def _gaussian_norm(alpha: float) -> float:
    return (alpha / (2.0 * math.pi)) ** 1.5


def qmsl_density_eigenvalue(x: Sequence[float], positions: Sequence[Sequence[float]], alpha: float) -> float:
    """n_x = (α/2π)^{3/2} Σ_i exp(-α|x - q_i|²/2)."""
    x = np.asarray(x, dtype=float)
    q = np.atleast_2d(np.asarray(positions, dtype=float))
    if q.size == 0:
        return 0.0
    r2 = np.sum((q - x) ** 2, axis=1)
    return float(_gaussian_norm(alpha) * np.sum(np.exp(-0.5 * alpha * r2)))


def csl_F(Q_minus_x: Sequence[float], offsets: Sequence[Sequence[float]], alpha: float) -> float:
    """F(Q - x) = (α/2π)^{3/2} Σ_i exp(-α|Q - x + q̃_i|²/2) for CM-relative offsets q̃_i."""
    v = np.asarray(Q_minus_x, dtype=float)
    q = np.atleast_2d(np.asarray(offsets, dtype=float))
    if q.size == 0:
        return 0.0
    r2 = np.sum((v + q) ** 2, axis=1)
    return float(_gaussian_norm(alpha) * np.sum(np.exp(-0.5 * alpha * r2)))


def csl_F_macroscopic(Q_minus_x: Sequence[float], density_profile: Callable[[float, float, float], float],
                      alpha: float, bounds: Optional[Sequence[Tuple[float, float]]] = None,
                      epsrel: float = 1e-8) -> float:
    """F for a continuous density profile D(y), y relative to the CM.

    The Gaussian kernel is integrated against the profile with nested
    adaptive quadrature over the kernel box (±8 α^{-1/2} around y = x - Q)
    intersected with ``bounds``, the support of the profile. Profile
    discontinuities should sit on the support bounds.

    Raises:
        NumericalError: quadrature did not converge
    """
    v = np.asarray(Q_minus_x, dtype=float)
    if v.shape != (3,):
        raise ValidationError("Q_minus_x", f"must be a 3-vector, got shape {v.shape}")
    bounds = bounds or [(-math.inf, math.inf)] * 3
    half = KERNEL_WIDTHS / math.sqrt(alpha)
    ranges = []
    for axis, (lo, hi) in enumerate(bounds):
        centre = -v[axis]
        lo, hi = max(lo, centre - half), min(hi, centre + half)
        if lo >= hi:
            return 0.0
        ranges.append((lo, hi))
    norm = _gaussian_norm(alpha)

    def integrand(y1, y2, y3):
        r2 = (v[0] + y1) ** 2 + (v[1] + y2) ** 2 + (v[2] + y3) ** 2
        return norm * math.exp(-0.5 * alpha * r2) * density_profile(y1, y2, y3)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.nquad(integrand, ranges, opts={"epsrel": epsrel, "limit": 100})
        except integrate.IntegrationWarning as e:
            raise NumericalError(f"csl_F_macroscopic quadrature failed: {e}") from e
    logger.debug(f"csl_F_macroscopic v={v.tolist()} -> {value:.6e} (err {err:.1e})")
    return value


def delta_i(csl: CslParams) -> float:
    """δ_i = (α/π)^{1/2} D₀² S_i [1/cm⁵]."""
    return math.sqrt(csl.alpha / math.pi) * csl.D0 ** 2 * csl.S_i


def macro_frequency(csl: CslParams, n_out: float) -> float:
    """Γ = ζ D₀ n_out: reduction rate when n_out particles leave the overlap."""
    if n_out < 0:
        raise ValidationError("n_out", f"must be >= 0, got {n_out!r}")
    return csl.zeta * csl.D0 * n_out


def lambda_cm(n: float, lambda_micro: float) -> float:
    """λ_CM = n λ, the CM localization rate of a rigid body."""
    if n <= 0 or lambda_micro <= 0:
        raise ValidationError("lambda_cm", f"n and lambda_micro must be positive, got {n!r}, {lambda_micro!r}")
    return n * lambda_micro


def csl_spreading(t, csl: CslParams, M: float, schrodinger_parts: Tuple[float, float],
                  hbar: float = CGS.hbar) -> Tuple[np.ndarray, np.ndarray]:
    """⟨Q_i²⟩ and ⟨P_i²⟩ including the collapse noise.

    Args:
        t: time(s) [s]
        csl: collapse parameters
        M: body mass [g]
        schrodinger_parts: (⟨Q_i²⟩_s, ⟨P_i²⟩_s) from the free evolution at the same t

    Returns:
        (⟨Q_i²⟩_s + ζδ_iℏ²t³/6M², ⟨P_i²⟩_s + ζδ_iℏ²t/2)
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t", "must be >= 0")
    kick = csl.zeta * delta_i(csl) * hbar ** 2
    Q2_s, P2_s = schrodinger_parts
    return Q2_s + kick * t ** 3 / (6.0 * M ** 2), P2_s + kick * t / 2.0


def csl_energy_rate(csl: CslParams, M: float, hbar: float = CGS.hbar) -> float:
    """ζ δ_i ℏ² / M, the CM energy gain per unit time."""
    return csl.zeta * delta_i(csl) * hbar ** 2 / M


@dataclass
class MomentumGrowthReport:
    times: np.ndarray
    csl_P2: np.ndarray
    cbr_P2: np.ndarray
    cbr_limit: float
    cbr_rate: float
    csl_slope: float
    crossing_time: Optional[float]
    notes: List[str] = field(default_factory=list)

    @property
    def qualitative_difference(self) -> bool:
        """CSL heats without bound while the CBR model relaxes to cbr_limit."""
        return self.csl_slope > 0 and self.cbr_rate > 0


def momentum_growth_comparison(t_grid: Sequence[float], csl: CslParams, params: ModelParams,
                               init: InitialMoments) -> MomentumGrowthReport:
    """Tabulate ⟨P_i²⟩ under CSL heating against the saturating CBR model.

    Both columns are per component, starting from the same ⟨P²⟩₀.
    """
    times = np.asarray(t_grid, dtype=float)
    hbar = params.hbar
    _, csl_P2 = csl_spreading(times, csl, params.M, (init.Q2_0, init.P2_0), hbar=hbar)
    _, _, cbr_P2 = second_moments(times, params, init, dims=1)
    cbr_limit = 0.5 * params.N * params.m * hbar * params.omega * params.thermal_factor
    slope = csl.zeta * delta_i(csl) * hbar ** 2 / 2.0

    crossing = None
    above = np.nonzero(csl_P2 > cbr_limit)[0]
    if above.size and init.P2_0 <= cbr_limit:
        crossing = float(times[above[0]])

    notes = [f"CSL: <P^2> grows linearly at {slope:.3e} per unit time without bound"]
    if params.damping > 0:
        notes.append(f"CBR: <P^2> relaxes at rate {params.damping:.3e} towards {cbr_limit:.3e}")
    else:
        notes.append("CBR: no coupling, <P^2> stays constant")
    if crossing is not None:
        notes.append(f"CSL exceeds the CBR equilibrium value at t = {crossing:.3e}")
    logger.info(notes[-1])
    return MomentumGrowthReport(times=times, csl_P2=csl_P2, cbr_P2=cbr_P2, cbr_limit=cbr_limit, cbr_rate=params.damping,
                                csl_slope=slope, crossing_time=crossing, notes=notes)

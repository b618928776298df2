# cbrlab/physics/position_grid.py
"""Finite-difference solver for the 1-D positional master equation.

    ρ̇ = (iℏ/2M)(∂²_Q - ∂²_Q')ρ - 𝓓(Q - Q')²ρ + 𝓓(ℏ/Mω)²(∂_Q + ∂_Q')²ρ
         + (NΛ/2)(Q∂_Q' + Q'∂_Q)ρ + (NΛ/2)ρ

on a uniform (Q, Q') grid with zero Dirichlet boundaries. Derivatives are
second-order central differences; (∂_Q + ∂_Q')² is built from the first
difference applied twice so that its discrete trace vanishes. The drift and
constant terms conserve the trace only up to O(dQ²); the residual is
reported by trace_drift_rate() and never corrected.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse, stats

from cbrlab.errors import DomainTooSmallError, FitError, IntegrationError, ValidationError
from cbrlab.physics.analytic_oracles import diffusion_constant
from cbrlab.physics.fock_algebra import ModelParams
from cbrlab.physics.lindblad_engine import check_time_grid, substeps

# Configure logging
logger = logging.getLogger(__name__)

MIN_POINTS = 64
POINTS_PER_WIDTH = 8
CFL_FACTOR = 0.2
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-6
BOUNDARY_MASS_TOL = 1e-6
CENTRAL_MASS_WARN = 1e-3
DIAGONAL_FLOOR = -1e-8
NOISE_FLOOR = 1e-8
MIN_R_SQUARED = 0.99


@dataclass(frozen=True)
class GridSpec:
    """Square grid on [-L, L]² with n points per axis."""
    L: float
    n: int
    bc: str = "dirichlet_zero"

    def __post_init__(self):
        if not math.isfinite(self.L) or self.L <= 0:
            raise ValidationError("L", f"must be finite and positive, got {self.L!r}")
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ValidationError("n", f"need an integer >= {MIN_POINTS}, got {self.n!r}")
        if self.bc != "dirichlet_zero":
            raise ValidationError("bc", f"unsupported boundary condition {self.bc!r}")

    @property
    def dQ(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def Q(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    def index_of(self, q: float) -> int:
        """Nearest grid index to position q."""
        if abs(q) > self.L:
            raise ValidationError("Q", f"{q!r} outside [-{self.L}, {self.L}]")
        return int(round((q + self.L) / self.dQ))

    @property
    def edge_points(self) -> int:
        """Number of points per side counted as boundary layer."""
        return max(2, self.n // 32)


@dataclass
class GridDensity:
    """ρ(Q_j, Q'_k) on a GridSpec; the discrete trace is Σ_j ρ_jj dQ."""
    values: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.spec.n, self.spec.n):
            raise ValidationError("values", f"shape {self.values.shape} does not match n={self.spec.n}")

    def trace(self) -> float:
        return float(np.real(np.trace(self.values))) * self.spec.dQ

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.values)).copy()

    def purity(self) -> float:
        """∫∫|ρ(Q, Q')|² dQ dQ'."""
        return float(np.sum(np.abs(self.values) ** 2)) * self.spec.dQ ** 2

    def moments(self) -> Tuple[float, float]:
        """⟨Q⟩ and ⟨Q²⟩ of the diagonal."""
        rho = self.diagonal() * self.spec.dQ
        tr = rho.sum()
        Q = self.spec.Q
        return float(np.dot(Q, rho) / tr), float(np.dot(Q ** 2, rho) / tr)

    def boundary_mass(self) -> float:
        k = self.spec.edge_points
        diag = np.abs(self.diagonal())
        return float(diag[:k].sum() + diag[-k:].sum()) * self.spec.dQ

    def outer_mass(self) -> float:
        """Mass farther than L/2 from the centre."""
        outside = np.abs(self.spec.Q) > 0.5 * self.spec.L
        return float(np.abs(self.diagonal())[outside].sum()) * self.spec.dQ

    def check(self) -> "GridDensity":
        herm = self.hermiticity_error()
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        if herm > HERMITIAN_TOL * scale:
            raise ValidationError("values", f"not Hermitian (error {herm:.2e})")
        tr = self.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError("values", f"discrete trace {tr!r} differs from 1 by more than {TRACE_TOL}")
        return self


def _first_difference(n: int, dQ: float) -> sparse.csr_matrix:
    return sparse.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format="csr") / (2.0 * dQ)


def _second_difference(n: int, dQ: float) -> sparse.csr_matrix:
    return sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="csr") / dQ ** 2


@dataclass
class GridOperator:
    """Right-hand side of the positional master equation on one grid."""
    spec: GridSpec
    params: ModelParams
    D1: sparse.csr_matrix = field(repr=False)
    D2: sparse.csr_matrix = field(repr=False)
    kinetic: complex
    decoherence: float
    momentum_diffusion: float
    drift: float

    def __post_init__(self):
        Q = self.spec.Q
        self._Q = Q
        self._separation2 = (Q[:, None] - Q[None, :]) ** 2

    def _along_rows(self, op: sparse.csr_matrix, rho: np.ndarray) -> np.ndarray:
        return np.asarray(op @ rho)

    def _along_cols(self, op: sparse.csr_matrix, rho: np.ndarray) -> np.ndarray:
        """ρ opᵀ, i.e. op acting on the Q' index."""
        return np.asarray(op @ rho.T).T

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        D1_rho = self._along_rows(self.D1, rho)
        rho_D1 = self._along_cols(self.D1, rho)
        out = self.kinetic * (self._along_rows(self.D2, rho) - self._along_cols(self.D2, rho))
        out -= self.decoherence * self._separation2 * rho
        if self.momentum_diffusion:
            out += self.momentum_diffusion * (
                self._along_rows(self.D1, D1_rho)
                + 2.0 * self._along_cols(self.D1, D1_rho)
                + self._along_cols(self.D1, rho_D1)
            )
        if self.drift:
            out += self.drift * (self._Q[:, None] * rho_D1 + D1_rho * self._Q[None, :] + rho)
        return out


def build_rhs(params: ModelParams, spec: GridSpec) -> GridOperator:
    """Assemble the stencils and coefficients for ``params`` on ``spec``."""
    hbar, M = params.hbar, params.M
    D = diffusion_constant(params)
    op = GridOperator(
        spec=spec,
        params=params,
        D1=_first_difference(spec.n, spec.dQ),
        D2=_second_difference(spec.n, spec.dQ),
        kinetic=1j * hbar / (2.0 * M),
        decoherence=D,
        momentum_diffusion=D * (hbar / (M * params.omega)) ** 2,
        drift=0.5 * params.damping,
    )
    logger.debug(f"Grid operator n={spec.n} dQ={spec.dQ:.4g} 𝓓={D:.4g} NΛ/2={op.drift:.4g}")
    return op


def _check_width(spec: GridSpec, width: float):
    if width <= 0:
        raise ValidationError("width", f"must be positive, got {width!r}")
    if width / spec.dQ < POINTS_PER_WIDTH:
        raise ValidationError(
            "width", f"{width!r} resolved by {width / spec.dQ:.1f} points; need >= {POINTS_PER_WIDTH} (raise n)"
        )


def _packet(spec: GridSpec, center: float, width: float, momentum: float, hbar: float) -> np.ndarray:
    Q = spec.Q
    return np.exp(-((Q - center) ** 2) / (4.0 * width ** 2) + 1j * momentum * Q / hbar)


def _pure(spec: GridSpec, psi: np.ndarray) -> GridDensity:
    rho = np.outer(psi, psi.conj())
    rho /= np.real(np.trace(rho)) * spec.dQ
    return GridDensity(0.5 * (rho + rho.conj().T), spec)


def gaussian_grid_state(spec: GridSpec, center: float = 0.0, width: float = 1.0, momentum: float = 0.0,
                        hbar: float = 1.0) -> GridDensity:
    """Pure Gaussian packet with position standard deviation ``width``."""
    _check_width(spec, width)
    return _pure(spec, _packet(spec, center, width, momentum, hbar))


def cat_grid_state(spec: GridSpec, centers: Sequence[float] = (-2.0, 2.0), width: float = 1.0) -> GridDensity:
    """Equal superposition of Gaussian packets at ``centers``."""
    _check_width(spec, width)
    if len(centers) < 2:
        raise ValidationError("centers", "a cat state needs at least two centres")
    psi = sum(_packet(spec, c, width, 0.0, 1.0) for c in centers)
    return _pure(spec, psi)


def trace_drift_rate(op: GridOperator, density: GridDensity) -> float:
    """d(tr ρ)/dt / tr ρ from the discrete right-hand side."""
    rhs = op(density.values)
    return float(np.real(np.trace(rhs))) * density.spec.dQ / density.trace()


@dataclass
class GridSeries:
    times: np.ndarray
    states: List[GridDensity]
    traces: np.ndarray
    boundary_mass: np.ndarray
    trace_drift: float

    def element(self, Qa: float, Qb: float) -> np.ndarray:
        """ρ(Qa, Qb, t) at the nearest grid point."""
        spec = self.states[0].spec
        j, k = spec.index_of(Qa), spec.index_of(Qb)
        return np.array([s.values[j, k] for s in self.states])

    @property
    def final(self) -> GridDensity:
        return self.states[-1]


def _rk4(op: GridOperator, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = op(rho)
    k2 = op(rho + 0.5 * h * k1)
    k3 = op(rho + 0.5 * h * k2)
    k4 = op(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _inspect(density: GridDensity, t: float, trace0: float):
    herm = density.hermiticity_error()
    if herm > 10 * HERMITIAN_TOL * max(float(np.max(np.abs(density.values))), 1.0):
        raise IntegrationError(f"Hermiticity lost at t={t:.4g} (error {herm:.2e}); reduce dt")
    diag_min = float(density.diagonal().min())
    if diag_min < DIAGONAL_FLOOR:
        raise IntegrationError(f"negative diagonal {diag_min:.2e} at t={t:.4g}; reduce dt")
    mass = density.boundary_mass()
    if mass > BOUNDARY_MASS_TOL:
        raise DomainTooSmallError(f"boundary mass {mass:.2e} at t={t:.4g} exceeds {BOUNDARY_MASS_TOL}; increase L")
    outer = density.outer_mass()
    if outer > CENTRAL_MASS_WARN:
        logger.warning(f"t={t:.4g}: mass {outer:.2e} lies beyond L/2")
    drift = abs(density.trace() - trace0)
    if drift > TRACE_TOL:
        logger.warning(f"t={t:.4g}: discrete trace moved by {drift:.2e}")
    return mass


def max_stable_dt(spec: GridSpec, params: ModelParams) -> float:
    """0.2 dQ² M / ℏ."""
    return CFL_FACTOR * spec.dQ ** 2 * params.M / params.hbar


def evolve_grid(rho0: GridDensity, params: ModelParams, t_grid: Sequence[float],
                dt: Optional[float] = None) -> GridSeries:
    """RK4 integration of the positional master equation.

    Raises:
        ValidationError: dt above 0.2 dQ² M/ℏ or an invalid initial density
        DomainTooSmallError: probability reached the boundary layer
        IntegrationError: Hermiticity or diagonal positivity lost
    """
    rho0.check()
    times = check_time_grid(t_grid)
    spec = rho0.spec
    bound = max_stable_dt(spec, params)
    if dt is None:
        dt = bound
    elif dt > bound * (1.0 + 1e-12):
        raise ValidationError("dt", f"{dt!r} exceeds the stability bound 0.2 dQ² M/ℏ = {bound!r}")

    op = build_rhs(params, spec)
    drift = trace_drift_rate(op, rho0)
    logger.info(f"Grid evolution n={spec.n} to t={times[-1]:.4g} (dt={dt:.3g}, trace drift {drift:.2e}/time)")
    if abs(drift) > 1e-8:
        logger.warning(f"discrete trace drift rate {drift:.2e} per unit time (O(dQ²) from the drift term)")

    trace0 = rho0.trace()
    rho = rho0.values.copy()
    t = times[0]
    states = [GridDensity(rho.copy(), spec)]
    masses = [_inspect(states[0], t, trace0)]
    for t_next in times[1:]:
        n_steps, h = substeps(t_next - t, dt)
        for _ in range(n_steps):
            rho = _rk4(op, rho, h)
        t = t_next
        snapshot = GridDensity(rho.copy(), spec)
        masses.append(_inspect(snapshot, t, trace0))
        states.append(snapshot)
    return GridSeries(times=times, states=states, traces=np.array([s.trace() for s in states]),
                      boundary_mass=np.array(masses), trace_drift=drift)


@dataclass(frozen=True)
class DecayFit:
    zeta: float
    stderr: float
    r_squared: float
    deltaQ: float
    n_points: int

    def relative_error(self, reference: float) -> float:
        return abs(self.zeta - reference) / abs(reference)


def fit_offdiag_decay(series: GridSeries, Qa: float, Qb: float, t_max: Optional[float] = None) -> DecayFit:
    """Least-squares slope of ln|ρ(Qa, Qb, t)|, returned as a decay rate ζ.

    Raises:
        ValidationError: |ρ(Qa, Qb, 0)| below the noise floor or fewer than 3 points
        FitError: R² < 0.99 with a slope not consistent with zero
    """
    times = series.times
    values = np.abs(series.element(Qa, Qb))
    if values[0] < NOISE_FLOOR:
        raise ValidationError("Qa/Qb", f"|ρ(Qa, Qb, 0)| = {values[0]:.2e} is below the noise floor")
    keep = np.ones_like(times, dtype=bool) if t_max is None else times <= t_max
    keep &= values > NOISE_FLOOR
    if keep.sum() < 3:
        raise ValidationError("t_max", "fit window holds fewer than 3 usable points")
    t, y = times[keep], np.log(values[keep])
    spec = series.states[0].spec
    deltaQ = abs(spec.Q[spec.index_of(Qa)] - spec.Q[spec.index_of(Qb)])

    if np.ptp(y) < 1e-12:
        return DecayFit(zeta=0.0, stderr=0.0, r_squared=1.0, deltaQ=deltaQ, n_points=int(keep.sum()))
    fit = stats.linregress(t, y)
    r_squared = fit.rvalue ** 2
    if r_squared < MIN_R_SQUARED and abs(fit.slope) > 3.0 * fit.stderr:
        raise FitError(f"ln|ρ| is not linear in the window (R²={r_squared:.4f}); shorten the fit window",
                       best_estimate=-fit.slope, error_bound=fit.stderr)
    logger.debug(f"Off-diagonal fit ΔQ={deltaQ:.4g}: ζ={-fit.slope:.6g} ± {fit.stderr:.2g} (R²={r_squared:.6f})")
    return DecayFit(zeta=-fit.slope, stderr=fit.stderr, r_squared=r_squared, deltaQ=deltaQ,
                    n_points=int(keep.sum()))


def export_snapshot(density: GridDensity, prefix: str) -> Tuple[Path, Path]:
    """Write Re ρ and Im ρ as CSV matrices (row = Q index)."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    re_path = prefix.with_name(prefix.name + "_re.csv")
    im_path = prefix.with_name(prefix.name + "_im.csv")
    np.savetxt(re_path, density.values.real, fmt="%.17g", delimiter=",")
    np.savetxt(im_path, density.values.imag, fmt="%.17g", delimiter=",")
    logger.info(f"Grid snapshot written to {re_path} and {im_path}")
    return re_path, im_path

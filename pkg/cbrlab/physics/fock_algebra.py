# cbrlab/physics/fock_algebra.py
"""Truncated Fock basis for the collective centre-of-mass mode.

The CM of N particles is mapped onto one bosonic mode b with

    X = √N b,  Q = √(ħ/2mω) (b + b†)/√N,  P = -i √(ħmω/2) √N (b - b†),

so that X = (NmωQ + iP)/√(2ħmω), [Q, P] = iħ and [X, X†] = N away from the
truncation edge. Matrices are dense numpy arrays.
"""
import logging
import math
import numbers
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from cbrlab.errors import InvalidStateError, TruncationWarning, ValidationError
from cbrlab.physics.cbr_spectrum import (
    DEFAULT_XI,
    integral_I_approx,
    planck_occupation,
    temperature_for_occupation,
)
from cbrlab.physics.phys_units import CGS, ENGINE, PhysicalConstants

# Configure logging
logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
STATE_HERMITIAN_TOL = 1e-10
STATE_TRACE_TOL = 1e-8
STATE_EIG_TOL = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the CBR model.

    N is the particle count, m the single-particle mass, M = N m the total
    mass (derived when omitted, checked when given), omega the
    characteristic frequency, Lambda the coupling strength, tau_c the CBR
    correlation time (defaults to DEFAULT_XI/omega), T the CBR temperature
    and dims the number of spatial dimensions.
    """
    N: float
    m: float
    omega: float
    Lambda: float = 0.0
    T: float = 0.0
    tau_c: Optional[float] = None
    dims: int = 1
    M: Optional[float] = None
    constants: PhysicalConstants = field(default=CGS)

    def __post_init__(self):
        for name in ("N", "m", "omega", "Lambda", "T"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ValidationError(name, f"must be a finite number, got {value!r}")
        if self.N < 1:
            raise ValidationError("N", f"must be >= 1, got {self.N!r}")
        for name in ("m", "omega"):
            if getattr(self, name) <= 0:
                raise ValidationError(name, f"must be positive, got {getattr(self, name)!r}")
        for name in ("Lambda", "T"):
            if getattr(self, name) < 0:
                raise ValidationError(name, f"must be >= 0, got {getattr(self, name)!r}")
        if self.dims not in (1, 3):
            raise ValidationError("dims", f"must be 1 or 3, got {self.dims!r}")

        if self.tau_c is None:
            object.__setattr__(self, "tau_c", DEFAULT_XI / self.omega)
        elif not math.isfinite(self.tau_c) or self.tau_c <= 0:
            raise ValidationError("tau_c", f"must be finite and positive, got {self.tau_c!r}")

        total = self.N * self.m
        if self.M is None:
            object.__setattr__(self, "M", total)
        elif not math.isfinite(self.M) or abs(self.M - total) > 1e-12 * total:
            raise ValidationError("M", f"must equal N*m = {total!r}, got {self.M!r}")

    @classmethod
    def engine(cls, N: float, Lambda: float, nbar: float = 0.0, m: float = 1.0,
               xi: float = DEFAULT_XI, dims: int = 1) -> "ModelParams":
        """Dimensionless parameters (ħ = ω = k_B = 1) for a target occupation."""
        T = temperature_for_occupation(nbar, 1.0, ENGINE)
        return cls(N=N, m=m, omega=1.0, Lambda=Lambda, T=T, tau_c=xi, dims=dims, constants=ENGINE)

    @property
    def nbar(self) -> float:
        """Thermal occupation at the characteristic frequency."""
        return planck_occupation(self.omega, self.T, self.constants)

    @property
    def thermal_factor(self) -> float:
        """1 + 2 n̄, the narrow-line value of the temperature integral."""
        return integral_I_approx(self.omega, self.T, self.constants)

    @property
    def hbar(self) -> float:
        return self.constants.hbar

    @property
    def damping(self) -> float:
        """N Λ, the moment damping rate."""
        return self.N * self.Lambda


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense operator on a truncated Fock space."""
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError(self.label or "entries", f"must be a square matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError(self.label or "entries", "contains non-finite values")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, f"{self.label}†")

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(float(np.max(np.abs(self.entries))), 1e-300)
        return self.hermiticity_error() <= tol * scale

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries @ other.entries, f"{self.label}{other.label}")


@dataclass(frozen=True)
class StateVector:
    """Ket on the truncated space. Raw ensemble members set physical=False."""
    amplitudes: np.ndarray
    physical: bool = True

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1:
            raise ValidationError("amplitudes", f"must be a vector, got shape {amplitudes.shape}")
        if not np.all(np.isfinite(amplitudes)):
            raise InvalidStateError("state vector has non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amplitudes)
        if self.physical and abs(self.norm() - 1.0) > 1e-10:
            raise InvalidStateError(f"physical state must be normalized, norm = {self.norm()!r}")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Density operator. Construction does not validate; call check()."""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError("entries", f"must be a square matrix, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        hermitian = 0.5 * (self.entries + self.entries.conj().T)
        return np.linalg.eigvalsh(hermitian)

    def expectation(self, operator) -> float:
        """Re tr(ρ A)."""
        matrix = operator.entries if isinstance(operator, OperatorMatrix) else operator
        return float(np.real(np.einsum("ij,ji->", self.entries, matrix)))

    def check(self, hermitian_tol: float = STATE_HERMITIAN_TOL, trace_tol: float = STATE_TRACE_TOL,
              eig_tol: float = STATE_EIG_TOL) -> "DensityMatrix":
        """Raise InvalidStateError unless ρ is Hermitian, unit trace and positive."""
        if not np.all(np.isfinite(self.entries)):
            raise InvalidStateError("density matrix has non-finite entries")
        herm = self.hermiticity_error()
        if herm > hermitian_tol:
            raise InvalidStateError(f"density matrix not Hermitian (error {herm:.3e})")
        trace_error = abs(self.trace() - 1.0)
        if trace_error > trace_tol:
            raise InvalidStateError(f"density matrix trace off by {trace_error:.3e}")
        min_eig = float(self.eigenvalues()[0])
        if min_eig < -eig_tol:
            raise InvalidStateError(f"density matrix has negative eigenvalue {min_eig:.3e}")
        return self


class CMOperators(NamedTuple):
    Q: OperatorMatrix
    P: OperatorMatrix
    X: OperatorMatrix
    b: OperatorMatrix


def annihilation_matrix(d: int) -> OperatorMatrix:
    """b with b[i, i+1] = √(i+1)."""
    if d < 2:
        raise ValidationError("d", f"truncation must be >= 2, got {d!r}")
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1), "b")


def _check_dim(d: int):
    if d < 4:
        raise ValidationError("d", f"truncation must be >= 4, got {d!r}")


def cm_operators(params: ModelParams, d: int) -> CMOperators:
    """Q, P, X and b for the collective mode."""
    _check_dim(d)
    hbar, m, omega, N = params.hbar, params.m, params.omega, params.N
    b = annihilation_matrix(d).entries
    bd = b.conj().T
    Q = math.sqrt(hbar / (2.0 * m * omega)) * (b + bd) / math.sqrt(N)
    P = -1j * math.sqrt(hbar * m * omega / 2.0) * math.sqrt(N) * (b - bd)
    return CMOperators(
        Q=OperatorMatrix(Q, "Q"),
        P=OperatorMatrix(P, "P"),
        X=OperatorMatrix(math.sqrt(N) * b, "X"),
        b=OperatorMatrix(b, "b"),
    )


def free_cm_hamiltonian(params: ModelParams, d: int) -> OperatorMatrix:
    """Free CM Hamiltonian P²/2M."""
    P = cm_operators(params, d).P.entries
    H = P @ P / (2.0 * params.M)
    return OperatorMatrix(0.5 * (H + H.conj().T), "H")


def _check_truncation(alpha: complex, d: int):
    r = abs(alpha)
    if r * r + 4.0 * r + 6.0 > d:
        message = f"truncation d={d} is small for |alpha|={r:.3g} (needs d >= {r * r + 4 * r + 6:.1f})"
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=3)


def _coherent_amplitudes(alpha: complex, d: int) -> np.ndarray:
    n = np.arange(d)
    if alpha == 0:
        amplitudes = np.zeros(d, dtype=complex)
        amplitudes[0] = 1.0
        return amplitudes
    log_mod = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amplitudes = np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))
    return amplitudes / np.linalg.norm(amplitudes)


def coherent_state(alpha: complex, d: int) -> StateVector:
    """Coherent state |α⟩, renormalized on the truncated basis."""
    _check_truncation(alpha, d)
    return StateVector(_coherent_amplitudes(complex(alpha), d))


def thermal_state(nbar: float, d: int) -> DensityMatrix:
    """Diagonal Boltzmann state with mean occupation nbar (before truncation)."""
    if not math.isfinite(nbar) or nbar < 0:
        raise ValidationError("nbar", f"must be finite and >= 0, got {nbar!r}")
    weights = np.zeros(d)
    if nbar == 0:
        weights[0] = 1.0
    else:
        weights = (nbar / (1.0 + nbar)) ** np.arange(d)
        weights /= weights.sum()
    return DensityMatrix(np.diag(weights).astype(complex))


def superposition_state(alpha: complex, separation: float, d: int,
                        params: Optional[ModelParams] = None) -> StateVector:
    """Balanced cat of two coherent states whose ⟨Q⟩ differ by ``separation``.

    The lobes sit at ⟨Q⟩ of α shifted by ±separation/2. Without params the
    engine-unit N = 1 mode map is used.
    """
    if params is None:
        params = ModelParams.engine(N=1, Lambda=0.0)
    q_zero = math.sqrt(params.hbar / (2.0 * params.m * params.omega * params.N))
    shift = separation / (4.0 * q_zero)
    alpha = complex(alpha)
    _check_truncation(abs(alpha) + abs(shift), d)
    amplitudes = _coherent_amplitudes(alpha + shift, d) + _coherent_amplitudes(alpha - shift, d)
    return StateVector(amplitudes / np.linalg.norm(amplitudes))

# cbrlab/physics/lindblad_engine.py
"""Master-equation engine for the CM mode coupled to the CBR.

The reduced generator is

    𝓛ρ = -(i/ħ)[H, ρ] + Σ_n (c_n ρ c_n† - ½{c_n† c_n, ρ})

with c₁ = √(ΛN n̄) b† and c₂ = √(ΛN(1 + n̄)) b. The joint generator keeps
one resonant CBR mode A explicitly and couples it through the Hermitian
operator L = A X† + A† X at rate Λ.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cbrlab import lab_config
from cbrlab.errors import DomainError, IntegrationError, InvalidStateError, ValidationError
from cbrlab.physics.fock_algebra import (
    DensityMatrix,
    ModelParams,
    OperatorMatrix,
    annihilation_matrix,
    cm_operators,
    free_cm_hamiltonian,
    thermal_state,
)

# Configure logging
logger = logging.getLogger(__name__)

# Invariant gates checked at every output time
TRACE_TOL = 1e-7
HERMITIAN_TOL = 1e-10
EIG_TOL = 1e-7
FAILURE_FACTOR = 10.0

# Fraction of the fastest time scale allowed per step
DT_FRACTION = 0.01


@dataclass(frozen=True)
class LindbladGenerator:
    """Generator 𝓛 on d×d density matrices.

    Jump operators are stored unscaled together with their rates; the
    applied operator is √rate · op.
    """
    H: OperatorMatrix
    jump_ops: Tuple[Tuple[OperatorMatrix, float], ...] = ()
    hbar: float = 1.0
    fastest_rate: float = 1.0
    subsystem_dims: Optional[Tuple[int, int]] = None
    _drift: np.ndarray = field(init=False, repr=False, compare=False)
    _jumps: Tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.H.dim
        jumps = []
        decay = np.zeros((d, d), dtype=complex)
        for op, rate in self.jump_ops:
            if op.dim != d:
                raise DomainError(f"jump operator {op.label} has dim {op.dim}, H has {d}")
            if not math.isfinite(rate) or rate < 0:
                raise ValidationError("rate", f"jump rates must be finite and >= 0, got {rate!r} for {op.label}")
            if rate == 0:
                continue
            c = math.sqrt(rate) * op.entries
            jumps.append(c)
            decay += c.conj().T @ c
        object.__setattr__(self, "_jumps", tuple(jumps))
        object.__setattr__(self, "_drift", -1j / self.hbar * self.H.entries - 0.5 * decay)

    @property
    def dim(self) -> int:
        return self.H.dim

    @property
    def drift_matrix(self) -> np.ndarray:
        """-(i/ħ)H - ½ Σ c†c, the no-jump part of the generator."""
        return self._drift

    @property
    def scaled_jumps(self) -> Tuple[np.ndarray, ...]:
        """√rate · op for every jump operator with non-zero rate."""
        return self._jumps

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """𝓛ρ for a d×d array."""
        K = self._drift
        out = K @ rho + rho @ K.conj().T
        for c in self._jumps:
            out += c @ rho @ c.conj().T
        return out

    __call__ = apply

    def liouvillian(self) -> np.ndarray:
        """Dense d²×d² superoperator acting on column-stacked ρ."""
        d = self.dim
        eye = np.eye(d)
        K = self._drift
        L = np.kron(eye, K) + np.kron(K.conj(), eye)
        for c in self._jumps:
            L += np.kron(c.conj(), c)
        return L


@dataclass
class EvolutionRecord:
    """Output of one master-equation run."""
    times: np.ndarray
    states: List[DensityMatrix]
    observables: Dict[str, np.ndarray]

    def series(self, name: str) -> np.ndarray:
        if name not in self.observables:
            raise KeyError(f"Unknown observable: {name}. Available: {sorted(self.observables)}")
        return self.observables[name]

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]


def build_generator(params: ModelParams, d: int) -> LindbladGenerator:
    """Reduced CM generator with delta-spectrum rates."""
    ops = cm_operators(params, d)
    nbar = params.nbar
    gamma = params.damping
    b = ops.b
    generator = LindbladGenerator(
        H=free_cm_hamiltonian(params, d),
        jump_ops=((b.dag(), gamma * nbar), (b, gamma * (1.0 + nbar))),
        hbar=params.hbar,
        fastest_rate=max(params.omega, gamma * (1.0 + 2.0 * nbar)),
    )
    logger.debug(f"Built generator d={d}, N*Lambda={gamma}, nbar={nbar}")
    return generator


def build_joint_generator(params: ModelParams, d_cm: int, d_cbr: int) -> LindbladGenerator:
    """Generator on CM ⊗ (one CBR mode) with coupling L = A X† + A† X."""
    if d_cm * d_cbr > lab_config.MAX_JOINT_DIM:
        raise DomainError(f"joint dimension {d_cm}*{d_cbr} exceeds {lab_config.MAX_JOINT_DIM}")
    if d_cbr < 2:
        raise ValidationError("d_cbr", f"must be >= 2, got {d_cbr!r}")
    X = cm_operators(params, d_cm).X.entries
    A = annihilation_matrix(d_cbr).entries
    eye_cm, eye_cbr = np.eye(d_cm), np.eye(d_cbr)

    H_cm = free_cm_hamiltonian(params, d_cm).entries
    H = np.kron(H_cm, eye_cbr) + params.hbar * params.omega * np.kron(eye_cm, A.conj().T @ A)
    L = np.kron(X.conj().T, A) + np.kron(X, A.conj().T)

    return LindbladGenerator(
        H=OperatorMatrix(H, "H_joint"),
        jump_ops=((OperatorMatrix(L, "L"), params.Lambda),),
        hbar=params.hbar,
        fastest_rate=max(params.omega, params.damping * (1.0 + 2.0 * params.nbar)),
        subsystem_dims=(d_cm, d_cbr),
    )


def joint_initial_state(rho_cm: DensityMatrix, params: ModelParams, d_cbr: int) -> DensityMatrix:
    """ρ_cm ⊗ thermal CBR mode at the scenario temperature."""
    return DensityMatrix(np.kron(rho_cm.entries, thermal_state(params.nbar, d_cbr).entries))


def partial_trace(rho_joint: DensityMatrix, d_cm: int, d_cbr: int, keep: str = "cm") -> DensityMatrix:
    """Trace out one factor of a CM ⊗ CBR state."""
    if rho_joint.dim != d_cm * d_cbr:
        raise DomainError(f"state dim {rho_joint.dim} != {d_cm}*{d_cbr}")
    blocks = rho_joint.entries.reshape(d_cm, d_cbr, d_cm, d_cbr)
    if keep == "cm":
        return DensityMatrix(np.einsum("ajbj->ab", blocks))
    if keep == "cbr":
        return DensityMatrix(np.einsum("iaib->ab", blocks))
    raise ValidationError("keep", f"must be 'cm' or 'cbr', got {keep!r}")


def moment_observables(params: ModelParams, d: int) -> Dict[str, OperatorMatrix]:
    """Operators for the first and second CM moments and kinetic energy."""
    ops = cm_operators(params, d)
    Q, P = ops.Q.entries, ops.P.entries
    return {
        "Q": ops.Q,
        "P": ops.P,
        "Q2": OperatorMatrix(Q @ Q, "Q2"),
        "QP": OperatorMatrix(Q @ P + P @ Q, "QP"),
        "P2": OperatorMatrix(P @ P, "P2"),
        "K": OperatorMatrix(P @ P / (2.0 * params.M), "K"),
    }


def ehrenfest_rate(gen: LindbladGenerator, rho: DensityMatrix, V: OperatorMatrix) -> float:
    """d⟨V⟩/dt = tr(V 𝓛ρ)."""
    if V.dim != gen.dim or rho.dim != gen.dim:
        raise DomainError(f"shape mismatch: generator {gen.dim}, rho {rho.dim}, V {V.dim}")
    return float(np.real(np.einsum("ij,ji->", V.entries, gen.apply(rho.entries))))


def purity(rho: DensityMatrix) -> float:
    """Tr ρ²."""
    return float(np.real(np.einsum("ij,ji->", rho.entries, rho.entries)))


def _nonnegative_eigenvalues(rho: DensityMatrix) -> np.ndarray:
    eigenvalues = rho.eigenvalues()
    if eigenvalues[0] < -1e-8:
        raise InvalidStateError(f"eigenvalue {eigenvalues[0]:.3e} below -1e-8")
    return eigenvalues


def linear_entropy(rho: DensityMatrix) -> float:
    """Tr(ρ - ρ²)."""
    _nonnegative_eigenvalues(rho)
    entries = rho.entries
    return float(np.real(np.trace(entries) - np.einsum("ij,ji->", entries, entries)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-Tr(ρ ln ρ)."""
    eigenvalues = _nonnegative_eigenvalues(rho)
    positive = eigenvalues[eigenvalues > 1e-300]
    return float(max(-np.sum(positive * np.log(positive)), 0.0))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """½ ‖ρ - σ‖₁."""
    diff = rho.entries - sigma.entries
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def _rk4_step(gen: LindbladGenerator, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = gen.apply(rho)
    k2 = gen.apply(rho + 0.5 * h * k1)
    k3 = gen.apply(rho + 0.5 * h * k2)
    k4 = gen.apply(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _monitor(rho: np.ndarray, t: float, dt: float):
    state = DensityMatrix(rho)
    drifts = {
        "trace": (abs(state.trace() - 1.0), TRACE_TOL),
        "hermiticity": (state.hermiticity_error(), HERMITIAN_TOL),
        "positivity": (max(-float(state.eigenvalues()[0]), 0.0), EIG_TOL),
    }
    for name, (value, tol) in drifts.items():
        if value > FAILURE_FACTOR * tol:
            raise IntegrationError(
                f"{name} drift {value:.3e} at t={t:.6g} exceeds {FAILURE_FACTOR * tol:.1e}; "
                f"reduce dt (currently {dt:.3e})"
            )
        if value > tol:
            logger.warning(f"{name} drift {value:.3e} at t={t:.6g} above {tol:.1e}")


def check_time_grid(t_grid: Sequence[float]) -> np.ndarray:
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < 1 or not np.all(np.isfinite(times)):
        raise ValidationError("t_grid", "must be a non-empty list of finite times")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValidationError("t_grid", "times must be non-negative and strictly increasing")
    return times


def substeps(interval: float, dt: float) -> Tuple[int, float]:
    """Number of equal steps no longer than dt covering interval."""
    n = max(1, int(math.ceil(interval / dt - 1e-9)))
    return n, interval / n


def evolve_master(gen: LindbladGenerator, rho0: DensityMatrix, t_grid: Sequence[float],
                  dt: Optional[float] = None, stepper: str = "rk4",
                  observables: Optional[Dict[str, OperatorMatrix]] = None) -> EvolutionRecord:
    """Integrate ρ̇ = 𝓛ρ with fixed-step RK4, sampling at t_grid.

    rho0 is the state at t_grid[0]. Nothing is renormalized; trace,
    Hermiticity and the smallest eigenvalue are monitored at each output.

    Raises:
        ValidationError: dt too coarse for the generator's fastest rate
        IntegrationError: an invariant drifted beyond 10x its tolerance
    """
    if stepper != "rk4":
        raise ValidationError("stepper", f"only 'rk4' is available, got {stepper!r}")
    times = check_time_grid(t_grid)
    dt_max = DT_FRACTION / gen.fastest_rate
    if dt is None:
        dt = dt_max
    elif not math.isfinite(dt) or dt <= 0 or dt > dt_max * (1 + 1e-12):
        raise ValidationError("dt", f"must be in (0, {dt_max:.3e}], got {dt!r}")
    rho0.check()
    if rho0.dim != gen.dim:
        raise DomainError(f"rho0 dim {rho0.dim} != generator dim {gen.dim}")

    observables = observables or {}
    rho = rho0.entries.copy()
    states = [DensityMatrix(rho.copy())]
    for k in range(1, times.size):
        n_steps, h = substeps(times[k] - times[k - 1], dt)
        for _ in range(n_steps):
            rho = _rk4_step(gen, rho, h)
        _monitor(rho, times[k], h)
        states.append(DensityMatrix(rho.copy()))

    series = {name: np.array([s.expectation(op) for s in states]) for name, op in observables.items()}
    series["purity"] = np.array([purity(s) for s in states])
    series["S_l"] = np.array([linear_entropy(s) for s in states])
    series["S_s"] = np.array([von_neumann_entropy(s) for s in states])
    logger.info(f"Master evolution done: d={gen.dim}, {times.size} outputs, t_end={times[-1]:.6g}, dt={dt:.3e}")
    return EvolutionRecord(times=times, states=states, observables=series)

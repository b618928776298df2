# cbrlab/physics/ito_unraveling.py
"""Itô unraveling of the master equation with raw (unnormalized) states.

Each trajectory follows the linear equation

    dψ = [-(i/ħ)H dt - ½ Σ c_k†c_k dt + Σ c_k dW_k] ψ,   dW_k dW_l = δ_kl dt,

integrated with Euler-Maruyama. The norm is never restored: the mean of
|ψ⟩⟨ψ| over trajectories is the density matrix, and ‖ψ‖² is the weight of
the normalized state in the physical ensemble. At T = 0 only c = √Λ X
survives, which is the low-temperature equation with dW of variance Λ dt.

Trajectories are integrated in vectorized batches of fixed size. Every
trajectory owns a counter-based Philox stream keyed by
trajectory_seed(master_seed, index), so the result does not depend on
how batches are spread over worker threads.
"""
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cbrlab import lab_config
from cbrlab.errors import QualityError, TruncationWarning, ValidationError
from cbrlab.physics.fock_algebra import DensityMatrix, ModelParams, OperatorMatrix, StateVector
from cbrlab.physics.lindblad_engine import check_time_grid, build_generator, substeps

# Configure logging
logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
NORM2_BOUNDS = (1e-6, 1e6)
MAX_RESAMPLE_FRACTION = 0.01
MAX_RESAMPLE_ATTEMPTS = 8


def trajectory_seed(master_seed: int, index: int) -> int:
    """splitmix64 mix of (master_seed, index); a bijection for fixed index."""
    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def philox_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class WienerConfig:
    """Noise settings: dW ~ Gaussian(0, Lambda·dt) for the raw T = 0 step."""
    Lambda: float
    dt: float
    master_seed: int
    n_channels: int = 1
    batch_size: int = lab_config.DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if not math.isfinite(self.Lambda) or self.Lambda < 0:
            raise ValidationError("Lambda", f"must be finite and >= 0, got {self.Lambda!r}")
        if not math.isfinite(self.dt) or self.dt <= 0:
            raise ValidationError("dt", f"must be finite and positive, got {self.dt!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= MASK64:
            raise ValidationError("master_seed", f"must be an unsigned 64-bit integer, got {self.master_seed!r}")
        if self.n_channels < 1:
            raise ValidationError("n_channels", f"must be >= 1, got {self.n_channels!r}")
        if self.batch_size < 1:
            raise ValidationError("batch_size", f"must be >= 1, got {self.batch_size!r}")

    @classmethod
    def for_params(cls, params: ModelParams, master_seed: int, dt: Optional[float] = None,
                   batch_size: int = lab_config.DEFAULT_BATCH_SIZE) -> "WienerConfig":
        """Config with dt defaulting to 1% of the fastest time scale."""
        fastest = max(params.omega, params.damping * (1.0 + 2.0 * params.nbar))
        return cls(Lambda=params.Lambda, dt=dt or 0.01 / fastest, master_seed=master_seed,
                   n_channels=params.dims, batch_size=batch_size)


def wiener_increments(rng: np.random.Generator, n_steps: int, variance: float,
                      n_channels: int = 1) -> np.ndarray:
    """(n_steps, n_channels) Gaussian increments with the given variance."""
    return rng.standard_normal((n_steps, n_channels)) * math.sqrt(variance)


def step_raw(psi: StateVector, X: OperatorMatrix, H: OperatorMatrix, cfg: WienerConfig,
             rng: np.random.Generator, hbar: float = 1.0) -> StateVector:
    """One Euler-Maruyama step of the T = 0 raw equation.

    ψ' = ψ + [-(i/ħ)H dt + X dW - (Λ/2) X†X dt] ψ with dW ~ Gaussian(0, Λ dt).
    The result is not renormalized.
    """
    dt = cfg.dt
    dW = float(wiener_increments(rng, 1, cfg.Lambda * dt)[0, 0])
    X_ = X.entries
    amplitudes = psi.amplitudes
    increment = (-1j / hbar) * dt * (H.entries @ amplitudes) + dW * (X_ @ amplitudes) \
        - 0.5 * cfg.Lambda * dt * (X_.conj().T @ (X_ @ amplitudes))
    return StateVector(amplitudes + increment, physical=False)


class _CompensatedSum:
    """Neumaier summation of equally shaped real arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self.carry = np.zeros(shape)

    def add(self, value: np.ndarray):
        t = self.total + value
        bigger = np.abs(self.total) >= np.abs(value)
        self.carry += np.where(bigger, (self.total - t) + value, (value - t) + self.total)
        self.total = t

    @property
    def value(self) -> np.ndarray:
        return self.total + self.carry


@dataclass
class TrajectoryEnsemble:
    """Raw trajectories and the density matrices reconstructed from them.

    states has shape (n_traj, n_times, d) and holds raw amplitudes; norms2
    holds ‖ψ‖². raw_mean is the plain mean of |ψ⟩⟨ψ|; reconstruction is
    raw_mean divided by its trace; stderr is the per-entry standard error
    of raw_mean.
    """
    n_traj: int
    seeds: np.ndarray
    times: np.ndarray
    states: Optional[np.ndarray]
    norms2: np.ndarray
    raw_mean: np.ndarray
    stderr: np.ndarray
    resampled: int

    @property
    def reconstruction(self) -> List[DensityMatrix]:
        return [DensityMatrix(rho / np.trace(rho)) for rho in self.raw_mean]

    def mean_norm2(self) -> Tuple[np.ndarray, np.ndarray]:
        """Ensemble mean of ‖ψ‖² per output time and its standard error."""
        mean = self.norms2.mean(axis=0)
        err = self.norms2.std(axis=0, ddof=1) / math.sqrt(self.n_traj)
        return mean, err


@dataclass
class _BatchResult:
    states: Optional[np.ndarray]
    norms2: np.ndarray
    sum_outer: np.ndarray
    sum_square: np.ndarray
    resampled: int


class _Integrator:
    """Vectorized Euler-Maruyama integration of raw trajectories."""

    def __init__(self, params: ModelParams, psi0: StateVector, times: np.ndarray, dt: float):
        gen = build_generator(params, psi0.dim)
        self.drift = gen.drift_matrix
        self.jumps = gen.scaled_jumps
        self.psi0 = psi0.amplitudes
        self.plan = [substeps(times[k] - times[k - 1], dt) for k in range(1, times.size)]
        self.total_steps = sum(n for n, _ in self.plan)
        self.n_times = times.size

    def run(self, seeds: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Integrate one batch; returns states (B, n_times, d) and ‖ψ‖² (B, n_times)."""
        n_jumps = len(self.jumps)
        B = len(seeds)
        d = self.psi0.size
        if n_jumps:
            noise = np.stack(
                [philox_generator(seed).standard_normal((self.total_steps, n_jumps)) for seed in seeds],
                axis=-1,
            )
        psi = np.repeat(self.psi0[:, None], B, axis=1)
        out = np.empty((B, self.n_times, d), dtype=complex)
        out[:, 0, :] = psi.T
        step = 0
        for k, (n_sub, h) in enumerate(self.plan, start=1):
            root_h = math.sqrt(h)
            for _ in range(n_sub):
                update = h * (self.drift @ psi)
                for j, c in enumerate(self.jumps):
                    update += (c @ psi) * (root_h * noise[step, j, :])
                psi = psi + update
                step += 1
            out[:, k, :] = psi.T
        norms2 = np.sum(np.abs(out) ** 2, axis=2)
        return out, norms2


def _norms_ok(norms2: np.ndarray) -> np.ndarray:
    low, high = NORM2_BOUNDS
    return np.all(np.isfinite(norms2) & (norms2 >= low) & (norms2 <= high), axis=1)


def _run_batch(integrator: _Integrator, seeds: Sequence[int], keep_states: bool) -> _BatchResult:
    states, norms2 = integrator.run(seeds)
    resampled = 0
    for j in np.flatnonzero(~_norms_ok(norms2)):
        for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
            single, single_norm = integrator.run([trajectory_seed(int(seeds[j]), attempt)])
            if _norms_ok(single_norm)[0]:
                states[j], norms2[j] = single[0], single_norm[0]
                break
        else:
            raise QualityError(f"trajectory with seed {seeds[j]} left the norm bounds {NORM2_BOUNDS} "
                               f"after {MAX_RESAMPLE_ATTEMPTS} resamples")
        resampled += 1

    # Σ ψψ† and Σ |ψ_j|²|ψ_k|² per output time
    sum_outer = np.einsum("btj,btk->tjk", states, states.conj())
    moduli = np.abs(states) ** 2
    sum_square = np.einsum("btj,btk->tjk", moduli, moduli)
    return _BatchResult(states if keep_states else None, norms2, sum_outer, sum_square, resampled)


def run_ensemble(params: ModelParams, psi0: StateVector, n_traj: int, t_grid: Sequence[float],
                 cfg: WienerConfig, workers: int = 1, keep_states: bool = True) -> TrajectoryEnsemble:
    """Integrate n_traj raw trajectories and reconstruct ρ(t).

    Args:
        params: Model parameters in engine units
        psi0: Initial physical state
        n_traj: Number of trajectories (>= 100)
        t_grid: Output times; psi0 is the state at t_grid[0]
        cfg: Time step, master seed and batch size
        workers: Threads used to integrate batches
        keep_states: Keep every raw state for weighting checks and dumps

    Raises:
        QualityError: more than 1% of trajectories had to be resampled
    """
    if n_traj < 100:
        raise ValidationError("n_traj", f"must be >= 100, got {n_traj!r}")
    if cfg.n_channels != params.dims:
        raise ValidationError("n_channels", f"must equal dims={params.dims}, got {cfg.n_channels}")
    times = check_time_grid(t_grid)
    fastest = max(params.omega, params.damping * (1.0 + 2.0 * params.nbar))
    if cfg.dt > 0.01 / fastest * (1 + 1e-12):
        raise ValidationError("dt", f"must be <= {0.01 / fastest:.3e}, got {cfg.dt!r}")
    edge = float(np.sum(np.abs(psi0.amplitudes[-2:]) ** 2))
    if edge > 1e-10:
        message = f"initial state has population {edge:.2e} in the top two Fock levels"
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=2)

    integrator = _Integrator(params, psi0, times, cfg.dt)
    seeds = [trajectory_seed(cfg.master_seed, i) for i in range(n_traj)]
    batches = [seeds[i:i + cfg.batch_size] for i in range(0, n_traj, cfg.batch_size)]
    logger.info(f"Ito ensemble: {n_traj} trajectories in {len(batches)} batches, "
                f"{integrator.total_steps} steps each, workers={workers}")

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda batch: _run_batch(integrator, batch, keep_states), batches))

    d = psi0.dim
    outer_re, outer_im, square = (_CompensatedSum((times.size, d, d)) for _ in range(3))
    for result in results:
        outer_re.add(result.sum_outer.real)
        outer_im.add(result.sum_outer.imag)
        square.add(result.sum_square)

    raw_mean = (outer_re.value + 1j * outer_im.value) / n_traj
    variance = np.maximum(square.value / n_traj - np.abs(raw_mean) ** 2, 0.0)
    stderr = np.sqrt(variance / (n_traj - 1))
    resampled = sum(r.resampled for r in results)
    if resampled > MAX_RESAMPLE_FRACTION * n_traj:
        raise QualityError(f"{resampled} of {n_traj} trajectories were resampled")
    if resampled:
        logger.warning(f"{resampled} trajectories resampled after leaving the norm bounds")

    return TrajectoryEnsemble(
        n_traj=n_traj,
        seeds=np.array(seeds, dtype=np.uint64),
        times=times,
        states=np.concatenate([r.states for r in results]) if keep_states else None,
        norms2=np.concatenate([r.norms2 for r in results]),
        raw_mean=raw_mean,
        stderr=stderr,
        resampled=resampled,
    )


@dataclass
class WeightingReport:
    max_abs_diff: float
    scale: float
    min_weight: float
    max_weight: float
    passed: bool


def physical_weighting_check(ensemble: TrajectoryEnsemble, tol: float = 1e-12) -> WeightingReport:
    """Compare mean |ψ⟩⟨ψ| with mean w |ψ̂⟩⟨ψ̂|, w = ‖ψ‖², ψ̂ = ψ/‖ψ‖."""
    if ensemble.states is None:
        raise ValidationError("states", "ensemble was run with keep_states=False")
    states = ensemble.states
    weights = np.sum(np.abs(states) ** 2, axis=2)
    unit = states / np.sqrt(weights)[:, :, None]
    raw = np.einsum("btj,btk->tjk", states, states.conj()) / ensemble.n_traj
    physical = np.einsum("bt,btj,btk->tjk", weights, unit, unit.conj()) / ensemble.n_traj
    diff = float(np.max(np.abs(raw - physical)))
    scale = max(1.0, float(np.max(np.abs(raw))))
    return WeightingReport(
        max_abs_diff=diff,
        scale=scale,
        min_weight=float(weights.min()),
        max_weight=float(weights.max()),
        passed=diff <= tol * scale,
    )


def euler_maruyama_mean(params: ModelParams, rho0: DensityMatrix, t_grid: Sequence[float],
                        dt: float) -> List[DensityMatrix]:
    """Exact ensemble mean of the Euler-Maruyama scheme.

    E[ψ'ψ'†] = K ρ K† + dt Σ c ρ c† with K = 1 + dt(-(i/ħ)H - ½Σc†c), so the
    mean can be propagated deterministically. Its distance to the master
    equation isolates the time-step bias from sampling noise.
    """
    times = check_time_grid(t_grid)
    gen = build_generator(params, rho0.dim)
    eye = np.eye(rho0.dim)
    rho = rho0.entries.copy()
    out = [DensityMatrix(rho.copy())]
    for k in range(1, times.size):
        n_sub, h = substeps(times[k] - times[k - 1], dt)
        K = eye + h * gen.drift_matrix
        for _ in range(n_sub):
            new = K @ rho @ K.conj().T
            for c in gen.scaled_jumps:
                new += h * (c @ rho @ c.conj().T)
            rho = new
        out.append(DensityMatrix(rho.copy()))
    return out

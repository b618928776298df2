# cbrlab/engines/ito.py
import logging

import numpy as np

from cbrlab import lab_config
from cbrlab.engines.common import pure_initial_state, require_times, series_table
from cbrlab.errors import ScenarioError
from cbrlab.physics.lindblad_engine import build_generator, evolve_master, moment_observables, trace_distance
from cbrlab.physics.ito_unraveling import WienerConfig, physical_weighting_check, run_ensemble
from cbrlab.registry import EngineResult, EngineRun, registry

# Configure logging
logger = logging.getLogger(__name__)


@registry.register(
    name="ito",
    description="Raw linear Ito trajectories and the density matrix reconstructed from them",
    option_schema={
        "type": "object",
        "properties": {
            "d": {"type": "integer", "default": 40, "minimum": 4},
            "n_traj": {"type": "integer", "default": 2000, "minimum": 100},
            "dt": {"type": "number", "default": None,
                   "description": "Euler-Maruyama step; defaults to 1% of the fastest time scale"},
            "batch_size": {"type": "integer", "default": lab_config.DEFAULT_BATCH_SIZE, "minimum": 1},
            "compare_lindblad": {"type": "boolean", "default": True,
                                 "description": "Also solve the master equation and report trace distances"},
            "check_weighting": {"type": "boolean", "default": True,
                                "description": "Verify the raw/physical weighting identity"},
        },
    },
    outputs={
        "Q": "length",
        "P": "momentum",
        "K": "energy",
        "norm2_mean": "1",
        "norm2_stderr": "1",
        "trace_distance": "1",
    },
)
def run_ito(run: EngineRun) -> EngineResult:
    """Integrate the trajectory ensemble for one parameter point"""
    params, opts = run.params, run.options
    times = require_times(run, "ito")
    d = opts["d"]
    psi0 = pure_initial_state(run.initial_state, params, d)
    if psi0 is None:
        raise ScenarioError([f"engine 'ito' needs a pure initial state, got {run.initial_state.get('kind')!r}"],
                            run.scenario)

    cfg = WienerConfig.for_params(params, run.seed, dt=opts["dt"], batch_size=opts["batch_size"])
    ensemble = run_ensemble(params, psi0, opts["n_traj"], times, cfg, workers=run.threads,
                            keep_states=opts["check_weighting"])
    rhos = ensemble.reconstruction
    ops = moment_observables(params, d)
    norm_mean, norm_err = ensemble.mean_norm2()
    columns = {
        "Q": ("length", np.array([r.expectation(ops["Q"]) for r in rhos])),
        "P": ("momentum", np.array([r.expectation(ops["P"]) for r in rhos])),
        "K": ("energy", np.array([r.expectation(ops["K"]) for r in rhos])),
        "norm2_mean": ("1", norm_mean),
        "norm2_stderr": ("1", norm_err),
    }

    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(norm_err > 0, np.abs(norm_mean - 1.0) / norm_err, 0.0)
    summary = {
        "n_traj": ensemble.n_traj,
        "resampled": ensemble.resampled,
        "max_martingale_z": float(np.max(z)),
        "dt": cfg.dt,
    }
    if opts["compare_lindblad"]:
        reference = evolve_master(build_generator(params, d), psi0.projector(), times)
        distances = np.array([trace_distance(a, b) for a, b in zip(rhos, reference.states)])
        columns["trace_distance"] = ("1", distances)
        summary["trace_distance_final"] = float(distances[-1])
        summary["trace_distance_max"] = float(distances.max())
    if opts["check_weighting"]:
        report = physical_weighting_check(ensemble)
        summary["weighting_max_diff"] = report.max_abs_diff
        summary["weighting_passed"] = report.passed
        if not report.passed:
            logger.warning(f"raw/physical weighting identity off by {report.max_abs_diff:.2e}")

    logger.info(f"ito {run.scenario}: {ensemble.n_traj} trajectories, "
                f"max martingale z {summary['max_martingale_z']:.2f}")
    return EngineResult(tables={"series": series_table("series", times, columns, params)},
                        summary=summary, units={"dt": "time"})

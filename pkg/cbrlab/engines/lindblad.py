# cbrlab/engines/lindblad.py
import logging

import numpy as np
from scipy import stats

from cbrlab.engines.common import fock_initial_state, relative_error, require_times, series_table
from cbrlab.physics.analytic_oracles import (
    InitialMoments,
    entropy_rate,
    equilibrium_kinetic,
    first_moments,
    kinetic_energy,
    second_moments,
)
from cbrlab.physics.lindblad_engine import (
    build_generator,
    build_joint_generator,
    evolve_master,
    joint_initial_state,
    linear_entropy,
    moment_observables,
    partial_trace,
    purity,
    von_neumann_entropy,
)
from cbrlab.registry import EngineResult, EngineRun, registry

# Configure logging
logger = logging.getLogger(__name__)

OUTPUTS = {
    "Q": "length",
    "P": "momentum",
    "Q2": "length2",
    "QP": "action",
    "P2": "momentum2",
    "K": "energy",
    "purity": "1",
    "S_l": "1",
    "S_s": "1",
    "trace": "1",
    "Q2_oracle": "length2",
    "P2_oracle": "momentum2",
    "K_oracle": "energy",
}


def _relaxation_rate(times: np.ndarray, K: np.ndarray, K_eq: float) -> float:
    """Slope of -ln|K - K_eq| over the points still well away from equilibrium."""
    gap = np.abs(K - K_eq)
    usable = gap > 1e-6 * max(gap[0], 1e-300)
    if usable.sum() < 3:
        return float("nan")
    return float(-stats.linregress(times[usable], np.log(gap[usable])).slope)


@registry.register(
    name="lindblad",
    description="Master-equation evolution of the CM mode on a truncated Fock basis",
    option_schema={
        "type": "object",
        "properties": {
            "d": {"type": "integer", "default": 40, "minimum": 4,
                  "description": "Fock truncation of the CM mode"},
            "dt": {"type": "number", "default": None,
                   "description": "RK4 step; defaults to 1% of the fastest time scale"},
            "model": {"type": "string", "default": "reduced", "enum": ["reduced", "joint"],
                      "description": "reduced CM equation or CM coupled to one explicit CBR mode"},
            "d_cbr": {"type": "integer", "default": 8, "minimum": 2,
                      "description": "Fock truncation of the CBR mode (joint model)"},
        },
    },
    outputs=OUTPUTS,
)
def run_lindblad(run: EngineRun) -> EngineResult:
    """Evolve ρ and compare its moments with the closed forms"""
    params, opts = run.params, run.options
    times = require_times(run, "lindblad")
    d = opts["d"]
    rho0 = fock_initial_state(run.initial_state, params, d)
    ops = moment_observables(params, d)

    if opts["model"] == "joint":
        d_cbr = opts["d_cbr"]
        record = evolve_master(build_joint_generator(params, d, d_cbr),
                               joint_initial_state(rho0, params, d_cbr), times, dt=opts["dt"])
        states = [partial_trace(s, d, d_cbr) for s in record.states]
        series = {name: np.array([s.expectation(op) for s in states]) for name, op in ops.items()}
        series["purity"] = np.array([purity(s) for s in states])
        series["S_l"] = np.array([linear_entropy(s) for s in states])
        series["S_s"] = np.array([von_neumann_entropy(s) for s in states])
    else:
        record = evolve_master(build_generator(params, d), rho0, times, dt=opts["dt"], observables=ops)
        states = record.states
        series = dict(record.observables)
    series["trace"] = np.array([s.trace().real for s in states])

    init = InitialMoments.from_density(rho0, ops)
    Q_o, P_o = first_moments(times, params, init)
    Q2_o, QP_o, P2_o = second_moments(times, params, init, dims=1)
    K_o = kinetic_energy(times, params, init, dims=1)
    errors = {
        "Q": relative_error(series["Q"], Q_o),
        "P": relative_error(series["P"], P_o),
        "Q2": relative_error(series["Q2"], Q2_o),
        "QP": relative_error(series["QP"], QP_o),
        "P2": relative_error(series["P2"], P2_o),
    }
    columns = {name: (OUTPUTS[name], series[name]) for name in
               ("Q", "P", "Q2", "QP", "P2", "K", "purity", "S_l", "S_s", "trace")}
    columns["Q2_oracle"] = (OUTPUTS["Q2_oracle"], Q2_o)
    columns["P2_oracle"] = (OUTPUTS["P2_oracle"], P2_o)
    columns["K_oracle"] = (OUTPUTS["K_oracle"], K_o)

    K_eq = equilibrium_kinetic(params, dims=1)
    variances = (init.var_Q, init.var_P, init.cov_QP)
    summary = {
        "K_final": float(series["K"][-1]),
        "K_eq": K_eq,
        "relaxation_rate_fit": _relaxation_rate(times, series["K"], K_eq),
        "relaxation_rate": params.damping,
        "max_moment_error": max(errors.values()),
        "entropy_rate_oracle": entropy_rate(params, variances, dims=1),
        "entropy_rate_exact": entropy_rate(params, variances, dims=1, include_drift=True),
    }
    if times.size > 1:
        summary["entropy_rate_initial"] = float((series["S_l"][1] - series["S_l"][0]) / (times[1] - times[0]))
    units = {"K_final": "energy", "K_eq": "energy", "relaxation_rate_fit": "rate", "relaxation_rate": "rate",
             "entropy_rate_oracle": "rate", "entropy_rate_exact": "rate", "entropy_rate_initial": "rate"}
    logger.info(f"lindblad {run.scenario}: max moment error {summary['max_moment_error']:.2e}")

    return EngineResult(tables={"series": series_table("series", times, columns, params)}, summary=summary, units=units)

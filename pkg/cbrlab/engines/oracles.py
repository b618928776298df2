# cbrlab/engines/oracles.py
import logging
import math

from cbrlab.engines.common import require_times, series_table, unit_label
from cbrlab.errors import ScenarioError
from cbrlab.physics.analytic_oracles import (
    CALDEIRA_LEGGETT_TAU_D,
    DecoherenceQuery,
    InitialMoments,
    Regime,
    decoherence_time,
    diffusion_constant,
    entropy_poly,
    entropy_rate,
    equilibrium_kinetic,
    estimate_lambda,
    first_moments,
    kinetic_energy,
    momentum_share,
    offdiag_decay_rate,
    position_entropy_rate,
    second_moments,
)
from cbrlab.physics.grwp_baseline import lambda_cm
from cbrlab.registry import EngineResult, EngineRun, registry
from cbrlab.utils.tables import Table

# Configure logging
logger = logging.getLogger(__name__)


def initial_moments(initial_state, params) -> InitialMoments:
    kind = initial_state.get("kind", "vacuum")
    if kind == "moments":
        return InitialMoments(**{k: initial_state[k] for k in ("Q0", "P0", "Q2_0", "P2_0", "QP_0")})
    if kind in ("coherent", "vacuum"):
        return InitialMoments.coherent(initial_state.get("alpha", 0.0), params)
    raise ScenarioError([f"engine 'oracles' needs initial_state kind moments, coherent or vacuum, got {kind!r}"])


def _moments(run: EngineRun) -> EngineResult:
    params = run.params
    times = require_times(run, "oracles")
    init = initial_moments(run.initial_state, params)
    Q, P = first_moments(times, params, init)
    Q2, QP, P2 = second_moments(times, params, init)
    columns = {
        "Q": ("length", Q), "P": ("momentum", P), "Q2": ("length2", Q2), "QP": ("action", QP),
        "P2": ("momentum2", P2), "K": ("energy", kinetic_energy(times, params, init)),
    }
    summary = {"K_eq": equilibrium_kinetic(params), "K_final": float(columns["K"][1][-1]),
               "damping": params.damping}
    return EngineResult(tables={"series": series_table("series", times, columns, params)}, summary=summary,
                        units={"K_eq": "energy", "K_final": "energy", "damping": "rate"})


def _lambda(run: EngineRun) -> EngineResult:
    params, opts = run.params, run.options
    if opts["tau_R"] is None or opts["K_s"] is None:
        raise ScenarioError(["quantity 'lambda' needs engine_options tau_R and K_s"], run.scenario)
    K_eq = opts["K_eq"] if opts["K_eq"] is not None else equilibrium_kinetic(params)
    value = estimate_lambda(params.N, opts["tau_R"], opts["K_s"], K_eq)
    logger.info(f"Estimated Λ = {value:.3e} from τ_R={opts['tau_R']:.3e}, K_s={opts['K_s']:.3e}, K_eq={K_eq:.3e}")
    return EngineResult(summary={"Lambda": value, "K_eq": K_eq, "tau_R": opts["tau_R"], "K_s": opts["K_s"]},
                        units={"Lambda": "rate", "K_eq": "energy", "tau_R": "time", "K_s": "energy"})


def _decoherence(run: EngineRun) -> EngineResult:
    params, opts = run.params, run.options
    if opts["deltaQ"] is None:
        raise ScenarioError(["quantity 'decoherence' needs engine_options deltaQ"], run.scenario)
    deltaQ = opts["deltaQ"]
    general = decoherence_time(DecoherenceQuery(params, deltaQ, Regime.GENERAL))
    low = decoherence_time(DecoherenceQuery(params, deltaQ, Regime.LOW_FREQUENCY))
    selected = general if opts["regime"] == Regime.GENERAL.value else low
    summary = {
        "tau_D": selected,
        "tau_D_general": general,
        "tau_D_low_frequency": low,
        "zeta": offdiag_decay_rate(params, deltaQ),
        "D": diffusion_constant(params),
        "nbar": params.nbar,
    }
    units = {"tau_D": "time", "tau_D_general": "time", "tau_D_low_frequency": "time", "zeta": "rate",
             "D": "diffusion"}
    result = EngineResult(summary=summary, units=units)

    if opts["compare"]:
        table = Table("timescales", [("model", "-"), ("tau", unit_label("time", params)),
                                     ("rate", unit_label("rate", params))])
        table.add_row([f"cbr_{opts['regime']}", selected, 1.0 / selected if selected > 0 else math.inf])
        table.add_row(["caldeira_leggett", CALDEIRA_LEGGETT_TAU_D, 1.0 / CALDEIRA_LEGGETT_TAU_D])
        n = opts["grwp_n"] if opts["grwp_n"] is not None else params.N
        rate = lambda_cm(n, opts["grwp_lambda"])
        table.add_row(["grwp_lambda_cm", 1.0 / rate, rate])
        result.tables["timescales"] = table
        summary["grwp_lambda_cm"] = rate
        summary["grwp_lambda_cm_time"] = 1.0 / rate
        units.update({"grwp_lambda_cm": "rate", "grwp_lambda_cm_time": "time"})
    return result


def _entropy(run: EngineRun) -> EngineResult:
    params = run.params
    times = require_times(run, "oracles")
    init = initial_moments(run.initial_state, params)
    variances = (init.var_Q, init.var_P, init.cov_QP)
    columns = {
        "S_l": ("1", entropy_poly(times, params, init)),
        "S_l_drift": ("1", entropy_poly(times, params, init, include_drift=True)),
    }
    summary = {
        "entropy_rate": entropy_rate(params, variances),
        "entropy_rate_exact": entropy_rate(params, variances, include_drift=True),
        "position_entropy_rate": position_entropy_rate(params, init.var_Q),
        "momentum_share": momentum_share(params, variances),
    }
    return EngineResult(tables={"series": series_table("series", times, columns, params)}, summary=summary,
                        units={"entropy_rate": "rate", "entropy_rate_exact": "rate",
                               "position_entropy_rate": "rate"})


_QUANTITIES = {
    "moments": _moments,
    "lambda": _lambda,
    "decoherence": _decoherence,
    "entropy": _entropy,
}


@registry.register(
    name="oracles",
    description="Closed-form moments, coupling estimate, decoherence times and entropy growth",
    option_schema={
        "type": "object",
        "properties": {
            "quantity": {"type": "string", "default": "moments", "enum": sorted(_QUANTITIES)},
            "tau_R": {"type": "number", "default": None, "description": "relaxation time (lambda)"},
            "K_s": {"type": "number", "default": None, "description": "initial kinetic energy (lambda)"},
            "K_eq": {"type": "number", "default": None,
                     "description": "equilibrium kinetic energy (lambda); computed from params when omitted"},
            "deltaQ": {"type": "number", "default": None, "description": "superposition separation (decoherence)"},
            "regime": {"type": "string", "default": "general", "enum": [r.value for r in Regime]},
            "compare": {"type": "boolean", "default": False,
                        "description": "add the Caldeira-Leggett and GRWP comparison rows (decoherence)"},
            "grwp_n": {"type": "number", "default": None, "description": "particle count for λ_CM; defaults to N"},
            "grwp_lambda": {"type": "number", "default": 1e-16, "description": "GRWP single-particle rate [1/s]"},
        },
    },
    outputs={
        "Q": "length", "P": "momentum", "Q2": "length2", "QP": "action", "P2": "momentum2", "K": "energy",
        "S_l": "1", "S_l_drift": "1",
    },
    needs_time=False,
)
def run_oracles(run: EngineRun) -> EngineResult:
    """Evaluate the selected closed-form quantity"""
    return _QUANTITIES[run.options["quantity"]](run)

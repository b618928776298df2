# cbrlab/engines/grwp.py
import logging

from cbrlab.engines.common import series_table
from cbrlab.engines.oracles import initial_moments
from cbrlab.physics.analytic_oracles import schrodinger_moments
from cbrlab.physics.grwp_baseline import (
    CslParams,
    csl_energy_rate,
    csl_spreading,
    delta_i,
    lambda_cm,
    macro_frequency,
    momentum_growth_comparison,
)
from cbrlab.registry import EngineResult, EngineRun, registry

# Configure logging
logger = logging.getLogger(__name__)


@registry.register(
    name="grwp",
    description="GRWP/CSL baseline numbers and the heating comparison with the CBR model (CGS)",
    option_schema={
        "type": "object",
        "properties": {
            "alpha": {"type": "number", "default": 1e10, "description": "inverse squared localization width [1/cm²]"},
            "zeta": {"type": "number", "default": 1e-30, "description": "collapse strength [cm³/s]"},
            "D0": {"type": "number", "default": 1e24, "description": "particle density [1/cm³]"},
            "S_i": {"type": "number", "default": 1.0, "description": "transverse cross-section [cm²]"},
            "n": {"type": "number", "default": None, "description": "particles in the body; defaults to N"},
            "n_out": {"type": "number", "default": 0.0, "description": "particles outside the overlap region"},
        },
    },
    outputs={"Q2_csl": "length2", "P2_csl": "momentum2", "P2_cbr": "momentum2"},
    needs_time=False,
)
def run_grwp(run: EngineRun) -> EngineResult:
    """Collapse-model rates, spreading and heating for the scenario body"""
    params, opts = run.params, run.options
    n = opts["n"] if opts["n"] is not None else params.N
    csl = CslParams(alpha=opts["alpha"], zeta=opts["zeta"], D0=opts["D0"], S_i=opts["S_i"], n=n)
    rate_cm = lambda_cm(n, csl.lambda_micro)
    summary = {
        "lambda_micro": csl.lambda_micro,
        "lambda_cm": rate_cm,
        "lambda_cm_time": 1.0 / rate_cm,
        "delta_i": delta_i(csl),
        "macro_frequency": macro_frequency(csl, opts["n_out"]),
        "energy_rate": csl_energy_rate(csl, params.M, hbar=params.hbar),
    }
    units = {"lambda_micro": "rate", "lambda_cm": "rate", "lambda_cm_time": "time", "macro_frequency": "rate",
             "energy_rate": "energy_rate", "delta_i": "1/cm^5"}
    result = EngineResult(summary=summary, units=units)

    if run.times is not None:
        times = run.times
        init = initial_moments(run.initial_state, params)
        report = momentum_growth_comparison(times, csl, params, init)
        Q2_s, _, P2_s = schrodinger_moments(times, params, init)
        Q2_csl, _ = csl_spreading(times, csl, params.M, (Q2_s, P2_s), hbar=params.hbar)
        columns = {
            "Q2_csl": ("length2", Q2_csl),
            "P2_csl": ("momentum2", report.csl_P2),
            "P2_cbr": ("momentum2", report.cbr_P2),
        }
        result.tables["growth"] = series_table("growth", times, columns, params)
        summary["cbr_P2_limit"] = report.cbr_limit
        summary["crossing_time"] = report.crossing_time
        summary["qualitative_difference"] = report.qualitative_difference
        units.update({"cbr_P2_limit": "momentum2", "crossing_time": "time"})
        for note in report.notes:
            logger.info(f"grwp {run.scenario}: {note}")
    return result

# cbrlab/engines/integral.py
import logging
import math

from cbrlab.errors import RegimeError
from cbrlab.physics.cbr_spectrum import (
    LorentzianSpectrum,
    ThermalParams,
    integral_I_approx,
    integral_I_quadrature,
    integral_I_residue,
    residue_tail_bound,
)
from cbrlab.physics.phys_units import ENGINE
from cbrlab.registry import EngineResult, EngineRun, registry

# Configure logging
logger = logging.getLogger(__name__)


def _dimensionless_inputs(run: EngineRun):
    """(p, xi) from the options, falling back to ħω/k_BT and ωτ_c of the scenario."""
    params, opts = run.params, run.options
    xi = opts["xi"] if opts["xi"] is not None else params.omega * params.tau_c
    if opts["p"] is not None:
        return float(opts["p"]), float(xi)
    if params.T == 0:
        return math.inf, float(xi)
    return params.hbar * params.omega / (params.constants.k_B * params.T), float(xi)


@registry.register(
    name="integral",
    description="Temperature integral I by residue series, quadrature and the narrow-line value",
    option_schema={
        "type": "object",
        "properties": {
            "p": {"type": "number", "default": None, "description": "ħω/k_BT; defaults to the scenario's"},
            "xi": {"type": "number", "default": None, "description": "ωτ_c; defaults to the scenario's"},
            "n_terms": {"type": "integer", "default": 10_000, "minimum": 1},
            "tail": {"type": "boolean", "default": True,
                     "description": "add the Euler-Maclaurin estimate of the neglected residues"},
            "quadrature": {"type": "boolean", "default": True},
            "tol": {"type": "number", "default": 1e-10},
        },
    },
    outputs={},
    needs_time=False,
)
def run_integral(run: EngineRun) -> EngineResult:
    """Evaluate I at one (p, ξ) point with every available method"""
    opts = run.options
    p, xi = _dimensionless_inputs(run)
    # In units ħ = ω = k_B = 1 the inputs are T = 1/p and τ_c = ξ.
    T = 0.0 if math.isinf(p) else 1.0 / p
    summary = {"p": p, "xi": xi, "I_approx": integral_I_approx(1.0, T, ENGINE)}

    if T > 0 and xi / p < 1.0:
        tp = ThermalParams(p=p, xi=xi)
        try:
            summary["I_residue"] = integral_I_residue(tp, n_terms=opts["n_terms"], tail=opts["tail"])
            summary["tail_bound"] = residue_tail_bound(tp, opts["n_terms"])
        except RegimeError as e:
            logger.warning(f"integral {run.scenario}: {e}")
    else:
        logger.info(f"integral {run.scenario}: residue series skipped (p={p:.6g}, xi={xi:.6g})")

    if opts["quadrature"]:
        quad = integral_I_quadrature(LorentzianSpectrum(1.0, xi), T, tol=opts["tol"], constants=ENGINE)
        summary["I_quadrature"] = quad
        summary["approx_vs_quadrature"] = abs(summary["I_approx"] - quad) / abs(quad)
        if "I_residue" in summary:
            summary["residue_vs_quadrature"] = abs(summary["I_residue"] - quad) / abs(quad)

    return EngineResult(summary=summary)

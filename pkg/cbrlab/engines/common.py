# cbrlab/engines/common.py
"""Helpers shared by the scenario engines: unit labels, initial states, tables."""
import logging
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from cbrlab.errors import ScenarioError
from cbrlab.physics.fock_algebra import (
    DensityMatrix,
    ModelParams,
    StateVector,
    coherent_state,
    superposition_state,
    thermal_state,
)
from cbrlab.physics.phys_units import CGS
from cbrlab.utils.tables import Table

# Configure logging
logger = logging.getLogger(__name__)

_CGS_LABELS = {
    "time": "s",
    "rate": "1/s",
    "length": "cm",
    "mass": "g",
    "temperature": "K",
    "length2": "cm^2",
    "momentum": "g*cm/s",
    "momentum2": "g^2*cm^2/s^2",
    "action": "erg*s",
    "energy": "erg",
    "energy_rate": "erg/s",
    "diffusion": "1/(cm^2*s)",
    "1": "1",
    "-": "-",
}


def unit_label(dimension: str, params: ModelParams) -> str:
    """Header unit for a dimension key; engine-unit quantities are labelled 'engine'."""
    if dimension in ("1", "-"):
        return dimension
    if params.constants == CGS:
        return _CGS_LABELS.get(dimension, dimension)
    return "engine"


def series_table(name: str, times: np.ndarray, columns: Mapping[str, Tuple[str, Sequence[float]]],
                 params: ModelParams) -> Table:
    """Time-series table: first column time, then one column per observable."""
    table = Table(name, [("time", unit_label("time", params))]
                  + [(key, unit_label(dim, params)) for key, (dim, _) in columns.items()])
    for k, t in enumerate(times):
        table.add_row([float(t)] + [float(np.real(values[k])) for _, values in columns.values()])
    return table


def summary_table(summary: Dict[str, Any], units: Dict[str, str], params: ModelParams) -> Table:
    table = Table("summary", [("quantity", "-"), ("value", "-"), ("unit", "-")])
    for key, value in summary.items():
        table.add_row([key, value, unit_label(units.get(key, "1"), params)])
    return table


def pure_initial_state(initial_state: Dict[str, Any], params: ModelParams, d: int) -> Optional[StateVector]:
    """State vector for pure initial-state kinds, None for mixed ones."""
    kind = initial_state.get("kind", "vacuum")
    if kind == "vacuum":
        return coherent_state(0.0, d)
    if kind == "coherent":
        return coherent_state(initial_state.get("alpha", 0.0), d)
    if kind == "cat":
        return superposition_state(initial_state.get("alpha", 0.0), initial_state["separation"], d, params)
    return None


def fock_initial_state(initial_state: Dict[str, Any], params: ModelParams, d: int) -> DensityMatrix:
    """Density matrix on the truncated Fock basis for a scenario's initial_state."""
    kind = initial_state.get("kind", "vacuum")
    if kind == "thermal":
        return thermal_state(initial_state.get("nbar", params.nbar), d)
    psi = pure_initial_state(initial_state, params, d)
    if psi is None:
        raise ScenarioError([f"initial_state kind {kind!r} is not available on a Fock basis"])
    return psi.projector()


def require_times(run, engine: str) -> np.ndarray:
    if run.times is None:
        raise ScenarioError([f"engine {engine!r} needs a time block (t_max, n_outputs)"], run.scenario)
    return run.times


def relative_error(engine: np.ndarray, oracle: np.ndarray) -> float:
    """max |engine - oracle| relative to the largest oracle magnitude."""
    scale = float(np.max(np.abs(oracle)))
    if scale == 0.0:
        return float(np.max(np.abs(engine)))
    return float(np.max(np.abs(np.asarray(engine) - np.asarray(oracle)))) / scale

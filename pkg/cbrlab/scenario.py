# cbrlab/scenario.py
"""Scenario files: parsing, dispatch to the engines, result bundles and cross-validation."""
import difflib
import itertools
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy
import yaml

from cbrlab import __version__, lab_config
from cbrlab.engines.common import relative_error, summary_table, unit_label
from cbrlab.errors import LabError, ScenarioError
from cbrlab.physics.cbr_spectrum import DEFAULT_XI, temperature_for_occupation
from cbrlab.physics.fock_algebra import ModelParams
from cbrlab.physics.ito_unraveling import trajectory_seed
from cbrlab.physics.phys_units import CGS, ENGINE
from cbrlab.physics.position_grid import export_snapshot
from cbrlab.registry import EngineResult, EngineRun, registry
from cbrlab.utils.tables import Table, write_csv, write_json

# Configure logging
logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ("name", "engine", "description", "units", "params", "initial_state", "time", "seed",
                  "sweep", "outputs", "engine_options")

PARAM_DIMENSIONS = {
    "N": "1",
    "m": "mass",
    "omega": "rate",
    "Lambda": "rate",
    "T": "temperature",
    "tau_c": "time",
    "dims": "1",
    "M": "mass",
    "nbar": "1",
    "xi": "1",
}
PARAM_KEYS = {
    "cgs": ("N", "m", "omega", "Lambda", "T", "tau_c", "dims", "M"),
    "engine": ("N", "m", "omega", "Lambda", "T", "tau_c", "dims", "M", "nbar", "xi"),
}
REQUIRED_PARAMS = {
    "cgs": ("N", "m", "omega", "Lambda", "T"),
    "engine": ("N", "Lambda"),
}

INITIAL_STATE_KEYS = {
    "vacuum": (),
    "coherent": ("alpha",),
    "thermal": ("nbar",),
    "cat": ("alpha", "separation", "centers", "width"),
    "gaussian": ("center", "width", "momentum"),
    "moments": ("Q0", "P0", "Q2_0", "P2_0", "QP_0"),
}

SEED_LIMIT = 2 ** 64
MAX_REPORTED_ERRORS = 20


@dataclass
class SweepAxis:
    """One swept quantity; target is "params" or "options"."""
    axis: str
    values: List[Any]
    target: str


@dataclass
class Scenario:
    name: str
    engine: str
    units: str
    params: Dict[str, Any]
    initial_state: Dict[str, Any]
    engine_options: Dict[str, Any]
    t_max: Optional[float] = None
    n_outputs: Optional[int] = None
    seed: int = 0
    sweep: List[SweepAxis] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    description: str = ""
    defaults: Dict[str, Any] = field(default_factory=dict)
    source: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None

    def model_params(self, overrides: Optional[Dict[str, Any]] = None) -> ModelParams:
        return build_params(self.units, {**self.params, **(overrides or {})})

    def times(self) -> Optional[np.ndarray]:
        if self.t_max is None:
            return None
        return np.linspace(0.0, self.t_max, self.n_outputs)

    def plan(self) -> List[Dict[str, Any]]:
        """Every sweep point as {axis: value}, in row-major order of the axes."""
        if not self.sweep:
            return [{}]
        axes = [a.axis for a in self.sweep]
        return [dict(zip(axes, combo)) for combo in itertools.product(*(a.values for a in self.sweep))]


@dataclass
class ResultBundle:
    manifest: Dict[str, Any]
    tables: Dict[str, Table] = field(default_factory=dict)
    snapshots: Dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir) -> List[Path]:
        """Write every table, snapshot and the manifest into ``out_dir``."""
        out_dir = Path(out_dir)
        written = [write_csv(table, out_dir / f"{stem}.csv") for stem, table in sorted(self.tables.items())]
        for stem, density in sorted(self.snapshots.items()):
            written.extend(export_snapshot(density, str(out_dir / stem)))
        self.manifest["files"] = sorted(p.name for p in written) + ["manifest.json"]
        written.append(write_json(self.manifest, out_dir / "manifest.json"))
        logger.info(f"Wrote {len(written)} file(s) to {out_dir}")
        return written


@dataclass
class CrossValidationReport:
    engines: Tuple[str, str]
    metric: str
    value: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.value <= self.tolerance)


def build_params(units: str, raw: Dict[str, Any]) -> ModelParams:
    """ModelParams from scenario values; engine units may give nbar for T and xi for tau_c."""
    values = dict(raw)
    if "dims" in values:
        values["dims"] = int(values["dims"])
    if units == "cgs":
        return ModelParams(constants=CGS, **values)

    omega = values.pop("omega", 1.0)
    values.setdefault("m", 1.0)
    nbar = values.pop("nbar", None)
    xi = values.pop("xi", None)
    if nbar is not None:
        values["T"] = temperature_for_occupation(nbar, omega, ENGINE)
    if xi is not None:
        values["tau_c"] = xi / omega
    return ModelParams(omega=omega, constants=ENGINE, **values)


def _suggest(key: str, allowed) -> str:
    lowered = {a.lower(): a for a in allowed}
    close = difflib.get_close_matches(key.lower(), list(lowered), n=1)
    return f" (did you mean {lowered[close[0]]!r}?)" if close else ""


def _unknown_keys(section: str, data: Dict, allowed, errors: List[str]):
    for key in data:
        if key not in allowed:
            errors.append(f"{section}: unknown key {key!r}{_suggest(str(key), allowed)}")


def _number(value: Any, where: str, errors: List[str]) -> Optional[float]:
    """Numbers and numeric strings (YAML 1.1 reads 1e-38 without a dot as a string)."""
    if isinstance(value, bool):
        errors.append(f"{where}: expected a number, got a boolean")
        return None
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    errors.append(f"{where}: expected a number, got {value!r}")
    return None


def _mapping(value: Any, where: str, errors: List[str]) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        errors.append(f"{where}: expected a mapping, got {type(value).__name__}")
        return {}
    return value


def _parse_params(raw: Any, units: Optional[str], errors: List[str], defaults: Dict[str, Any]) -> Dict[str, Any]:
    if raw is None:
        errors.append("params: required")
        return {}
    data = _mapping(raw, "params", errors)
    if units is None:
        return {}
    _unknown_keys("params", data, PARAM_KEYS[units], errors)
    params: Dict[str, Any] = {}
    for key, value in data.items():
        if key in PARAM_KEYS[units]:
            number = _number(value, f"params.{key}", errors)
            if number is not None:
                params[key] = number
    for key in REQUIRED_PARAMS[units]:
        if key not in data:
            errors.append(f"params.{key}: required for {units} units")
    if units == "engine":
        if "nbar" in data and "T" in data:
            errors.append("params: give either nbar or T, not both")
        if "xi" in data and "tau_c" in data:
            errors.append("params: give either xi or tau_c, not both")
        for key, value in (("m", 1.0), ("omega", 1.0)):
            if key not in data:
                defaults[f"params.{key}"] = value
        if "nbar" not in data and "T" not in data:
            defaults["params.T"] = 0.0
        if "xi" not in data and "tau_c" not in data:
            defaults["params.xi"] = DEFAULT_XI
    elif "tau_c" not in data and params.get("omega"):
        defaults["params.tau_c"] = DEFAULT_XI / params["omega"]
    if "dims" not in data:
        defaults["params.dims"] = 1
    return params


def _alpha(value: Any, where: str, errors: List[str]) -> Optional[complex]:
    """alpha as a number or a [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            errors.append(f"{where}: expected [re, im], got {value!r}")
            return None
        re = _number(value[0], where, errors)
        im = _number(value[1], where, errors)
        return None if re is None or im is None else complex(re, im)
    number = _number(value, where, errors)
    return None if number is None else complex(number)


def _parse_initial_state(raw: Any, errors: List[str], defaults: Dict[str, Any]) -> Dict[str, Any]:
    if raw is None:
        defaults["initial_state"] = {"kind": "vacuum"}
        return {"kind": "vacuum"}
    data = _mapping(raw, "initial_state", errors)
    kind = data.get("kind")
    if kind not in INITIAL_STATE_KEYS:
        errors.append(f"initial_state.kind: must be one of {sorted(INITIAL_STATE_KEYS)}, got {kind!r}"
                      f"{_suggest(str(kind), INITIAL_STATE_KEYS)}")
        return {"kind": "vacuum"}
    allowed = INITIAL_STATE_KEYS[kind]
    _unknown_keys(f"initial_state ({kind})", {k: v for k, v in data.items() if k != "kind"}, allowed, errors)
    state: Dict[str, Any] = {"kind": kind}
    for key in allowed:
        if key not in data:
            continue
        where = f"initial_state.{key}"
        if key == "alpha":
            state[key] = _alpha(data[key], where, errors)
        elif key == "centers":
            if not isinstance(data[key], (list, tuple)) or len(data[key]) < 1:
                errors.append(f"{where}: expected a list of positions")
            else:
                state[key] = [_number(v, where, errors) for v in data[key]]
        else:
            state[key] = _number(data[key], where, errors)
    if kind == "moments":
        for key in allowed:
            if key not in data:
                errors.append(f"initial_state.{key}: required for kind 'moments'")
    if kind == "cat" and "separation" not in data and "centers" not in data:
        errors.append("initial_state: kind 'cat' needs separation (Fock engines) or centers (grid engine)")
    return state


def _parse_time(raw: Any, errors: List[str]) -> Tuple[Optional[float], Optional[int]]:
    if raw is None:
        return None, None
    data = _mapping(raw, "time", errors)
    _unknown_keys("time", data, ("t_max", "n_outputs"), errors)
    t_max = _number(data.get("t_max"), "time.t_max", errors) if "t_max" in data else None
    if t_max is None or not math.isfinite(t_max) or t_max <= 0:
        errors.append(f"time.t_max: required, finite and positive, got {data.get('t_max')!r}")
        t_max = None
    n_outputs = data.get("n_outputs")
    if isinstance(n_outputs, bool) or not isinstance(n_outputs, int) or n_outputs < 2:
        errors.append(f"time.n_outputs: required, an integer >= 2, got {n_outputs!r}")
        n_outputs = None
    if t_max is None or n_outputs is None:
        return None, None
    return float(t_max), n_outputs


def _coerce_options(raw: Dict[str, Any], properties: Dict[str, dict], errors: List[str]) -> Dict[str, Any]:
    options = dict(raw)
    for key, value in raw.items():
        spec = properties.get(key, {})
        if spec.get("type") == "number" and isinstance(value, str):
            options[key] = _number(value, f"engine_options.{key}", errors)
    return options


def _parse_sweep(raw: Any, units: Optional[str], properties: Dict[str, dict], errors: List[str]) -> List[SweepAxis]:
    if raw is None:
        return []
    if not isinstance(raw, list) or not raw:
        errors.append("sweep: expected a non-empty list of {axis, values | logspace}")
        return []
    param_keys = PARAM_KEYS[units] if units else ()
    axes: List[SweepAxis] = []
    for i, entry in enumerate(raw):
        where = f"sweep[{i}]"
        entry = _mapping(entry, where, errors)
        _unknown_keys(where, entry, ("axis", "values", "logspace"), errors)
        axis = entry.get("axis")
        if axis in param_keys:
            target = "params"
        elif axis in properties:
            target = "options"
        else:
            errors.append(f"{where}.axis: {axis!r} is neither a parameter nor an engine option"
                          f"{_suggest(str(axis), tuple(param_keys) + tuple(properties))}")
            continue
        if any(a.axis == axis for a in axes):
            errors.append(f"{where}.axis: {axis!r} swept twice")
            continue

        if ("values" in entry) == ("logspace" in entry):
            errors.append(f"{where}: give exactly one of values or logspace")
            continue
        if "values" in entry:
            if not isinstance(entry["values"], list) or not entry["values"]:
                errors.append(f"{where}.values: expected a non-empty list")
                continue
            values = [_number(v, f"{where}.values", errors) for v in entry["values"]]
        else:
            spec = entry["logspace"]
            if not isinstance(spec, list) or len(spec) != 3:
                errors.append(f"{where}.logspace: expected [start_exponent, stop_exponent, num]")
                continue
            start = _number(spec[0], f"{where}.logspace", errors)
            stop = _number(spec[1], f"{where}.logspace", errors)
            num = spec[2]
            if isinstance(num, bool) or not isinstance(num, int) or num < 1:
                errors.append(f"{where}.logspace: num must be a positive integer, got {num!r}")
                continue
            if start is None or stop is None:
                continue
            values = [float(v) for v in np.logspace(start, stop, num)]
        if any(v is None for v in values):
            continue
        if axis == "dims" or (target == "options" and properties[axis].get("type") == "integer"):
            values = [int(round(v)) for v in values]
        axes.append(SweepAxis(axis=axis, values=values, target=target))
    return axes


def _check_points(scenario: Scenario, errors: List[str]):
    """Build the parameters and options of every sweep point so bad points fail at parse time."""
    seen = set()
    for point in scenario.plan():
        try:
            _point_run(scenario, point, scenario.seed, 1)
        except ScenarioError as e:
            problems = [f"sweep point {point}: {msg}" if point else msg for msg in e.errors]
        except LabError as e:
            problems = [f"sweep point {point}: {e}" if point else str(e)]
        else:
            continue
        for problem in problems:
            if problem not in seen and len(errors) < MAX_REPORTED_ERRORS:
                seen.add(problem)
                errors.append(problem)


def scenario_from_dict(data: Any) -> Scenario:
    """Validate a scenario mapping, collecting every problem before raising.

    Raises:
        ScenarioError: listing all problems found
    """
    if not isinstance(data, dict):
        raise ScenarioError([f"top level must be a mapping, got {type(data).__name__}"])
    errors: List[str] = []
    defaults: Dict[str, Any] = {}
    _unknown_keys("scenario", data, TOP_LEVEL_KEYS, errors)

    name = data.get("name")
    if not isinstance(name, str) or not name.strip():
        errors.append("name: required, a non-empty string")
        name = None

    engine = data.get("engine")
    engine_info = None
    registry.load_engines()
    if engine is None:
        errors.append(f"engine: required, one of {sorted(registry.engines) or 'the registered engines'}")
    else:
        try:
            engine_info = registry.get(str(engine))
        except ScenarioError as e:
            errors.extend(f"engine: {msg}" for msg in e.errors)

    units = data.get("units")
    if units not in PARAM_KEYS:
        errors.append(f"units: required, one of 'engine' or 'cgs', got {units!r}")
        units = None

    params = _parse_params(data.get("params"), units, errors, defaults)
    initial_state = _parse_initial_state(data.get("initial_state"), errors, defaults)
    t_max, n_outputs = _parse_time(data.get("time"), errors)
    if engine_info is not None and engine_info["needs_time"] and "time" not in data:
        errors.append(f"time: engine {engine!r} needs a time block with t_max and n_outputs")

    seed = data.get("seed", 0)
    if "seed" not in data:
        defaults["seed"] = 0
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
        errors.append(f"seed: must be an integer in [0, 2^64), got {seed!r}")
        seed = 0

    properties = engine_info["option_schema"].get("properties", {}) if engine_info else {}
    raw_options = _mapping(data.get("engine_options"), "engine_options", errors)
    options: Dict[str, Any] = {}
    if engine_info is not None:
        coerced = _coerce_options(raw_options, properties, errors)
        try:
            options = registry.resolve_options(str(engine), coerced)
        except ScenarioError as e:
            errors.extend(e.errors)
        defaults["engine_options"] = {k: v for k, v in options.items() if k not in raw_options}

    sweep = _parse_sweep(data.get("sweep"), units, properties, errors)
    if sweep:
        points = math.prod(len(a.values) for a in sweep)
        if points > lab_config.MAX_SWEEP_POINTS:
            errors.append(f"sweep: {points} points exceed the limit of {lab_config.MAX_SWEEP_POINTS}")
        swept = {a.axis for a in sweep} | set(params)
        if units == "engine" and {"nbar", "T"} <= swept:
            errors.append("sweep: nbar and T cannot both be set")

    outputs = data.get("outputs", [])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        errors.append("outputs: expected a list of observable names")
        outputs = []
    elif engine_info is not None:
        available = engine_info["outputs"]
        for out in outputs:
            if out not in available:
                errors.append(f"outputs: engine {engine!r} has no observable {out!r}{_suggest(out, available)}"
                              f" (available: {sorted(available)})")

    if errors:
        raise ScenarioError(errors, name)

    scenario = Scenario(
        name=name,
        engine=str(engine),
        units=units,
        params=params,
        initial_state=initial_state,
        engine_options=options,
        t_max=t_max,
        n_outputs=n_outputs,
        seed=seed,
        sweep=sweep,
        outputs=list(outputs),
        description=str(data.get("description", "")),
        defaults=defaults,
        source=data,
    )
    _check_points(scenario, errors)
    if errors:
        raise ScenarioError(errors, name)
    for key, value in defaults.items():
        logger.debug(f"Scenario {name}: default {key} = {value!r}")
    return scenario


def parse_scenario(path) -> Scenario:
    """Read and validate a YAML scenario file.

    Raises:
        ScenarioError: missing file, malformed YAML or invalid content
    """
    path = Path(path)
    if not path.is_file():
        raise ScenarioError([f"file not found: {path}"])
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ScenarioError([f"{path}: not valid YAML: {e}"]) from e
    scenario = scenario_from_dict(data)
    scenario.path = path
    logger.info(f"Parsed scenario {scenario.name} ({scenario.engine}, {len(scenario.plan())} point(s))")
    return scenario


def load_manifest(path) -> Tuple[Scenario, int]:
    """Scenario and seed recorded in a bundle's manifest.json, for re-running it."""
    with open(path, encoding="utf-8") as f:
        manifest = json.load(f)
    return scenario_from_dict(manifest["scenario"]), int(manifest["seed"])


def resolve_scenario_path(ref: str) -> Path:
    """A scenario file path, or the name of a built-in scenario."""
    path = Path(ref)
    if path.is_file():
        return path
    builtin = lab_config.SCENARIO_DIR / f"{ref}.yaml"
    if builtin.is_file():
        return builtin
    names = [entry["name"] for entry in builtin_scenarios()]
    raise ScenarioError([f"no scenario file or built-in scenario named {ref!r}{_suggest(ref, names)}"])


def builtin_scenarios(directory=None) -> List[Dict[str, str]]:
    directory = Path(directory or lab_config.SCENARIO_DIR)
    entries = []
    for path in sorted(directory.glob("*.yaml")):
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            logger.warning(f"Skipping unreadable scenario {path}: {e}")
            continue
        entries.append({
            "name": str(data.get("name", path.stem)),
            "engine": str(data.get("engine", "?")),
            "description": str(data.get("description", "")).strip(),
            "path": str(path),
        })
    return entries


def _point_run(s: Scenario, point: Dict[str, Any], seed: int, threads: int) -> EngineRun:
    param_over = {a.axis: point[a.axis] for a in s.sweep if a.target == "params" and a.axis in point}
    option_over = {a.axis: point[a.axis] for a in s.sweep if a.target == "options" and a.axis in point}
    options = registry.resolve_options(s.engine, {**s.engine_options, **option_over}) if option_over \
        else dict(s.engine_options)
    return EngineRun(
        scenario=s.name,
        params=s.model_params(param_over),
        initial_state=dict(s.initial_state),
        times=s.times(),
        options=options,
        seed=seed,
        threads=threads,
    )


def _select_outputs(s: Scenario, tables: Dict[str, Table]) -> Dict[str, Table]:
    """Restrict observable tables to the requested outputs; other tables pass through."""
    if not s.outputs:
        return dict(tables)
    available = set(registry.get(s.engine)["outputs"])
    selected = {}
    for stem, table in tables.items():
        names = {c for c, _ in table.columns[1:]}
        selected[stem] = table.select(s.outputs) if names & available else table
    return selected


def _sweep_table(s: Scenario, plan: List[Dict[str, Any]], results: List[EngineResult]) -> Table:
    base = s.model_params()
    keys: List[str] = []
    units: Dict[str, str] = {}
    for result in results:
        for key in result.summary:
            if key not in keys:
                keys.append(key)
                units[key] = result.units.get(key, "1")
    axis_columns = [(a.axis, unit_label(PARAM_DIMENSIONS[a.axis], base) if a.target == "params" else "-")
                    for a in s.sweep]
    table = Table("sweep", axis_columns + [(k, unit_label(units[k], base)) for k in keys])
    for point, result in zip(plan, results):
        table.add_row([point[a.axis] for a in s.sweep] + [result.summary.get(k) for k in keys])
    table.sort(key_columns=len(s.sweep))
    return table


def run_scenario(s: Scenario, seed: Optional[int] = None, threads: Optional[int] = None) -> ResultBundle:
    """Run every point of a scenario and gather the tables and manifest.

    Sweep points are independent; point i draws from trajectory_seed(seed, i)
    so results do not depend on the thread count or completion order.
    """
    seed = s.seed if seed is None else seed
    threads = threads or lab_config.DEFAULT_THREADS
    plan = s.plan()
    logger.info(f"Running scenario {s.name} (engine {s.engine}, {len(plan)} point(s), {threads} thread(s))")
    start = time.perf_counter()
    try:
        if s.sweep:
            def work(index: int) -> EngineResult:
                run = _point_run(s, plan[index], trajectory_seed(seed, index), 1)
                return registry.run_engine(s.engine, run)

            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, range(len(plan))))
            tables = {"sweep": _sweep_table(s, plan, results)}
            snapshots = {}
        else:
            result = registry.run_engine(s.engine, _point_run(s, {}, seed, threads))
            tables = _select_outputs(s, result.tables)
            tables["summary"] = summary_table(result.summary, result.units, s.model_params())
            snapshots = dict(result.snapshots)
    except LabError as e:
        e.add_note(f"while running scenario {s.name!r} (engine {s.engine})")
        logger.error(f"Scenario {s.name} failed: {e}")
        raise
    wall = time.perf_counter() - start
    logger.info(f"Scenario {s.name} finished in {wall:.2f} s")

    manifest = {
        "scenario": s.source,
        "name": s.name,
        "engine": s.engine,
        "units": s.units,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": seed,
        "sweep_seeds": "trajectory_seed(seed, point index)" if s.sweep else None,
        "sweep_points": len(plan),
        "threads": threads,
        "wall_time_s": wall,
        "defaults": s.defaults,
        "engine_options": s.engine_options,
    }
    return ResultBundle(manifest=manifest, tables=tables, snapshots=snapshots)


def _require_same(a: Scenario, b: Scenario, times: bool = True):
    problems = []
    if a.model_params() != b.model_params():
        problems.append(f"parameters differ: {a.params} vs {b.params}")
    if times and not np.array_equal(a.times(), b.times()):
        problems.append(f"time grids differ: ({a.t_max}, {a.n_outputs}) vs ({b.t_max}, {b.n_outputs})")
    if times and a.initial_state != b.initial_state:
        problems.append(f"initial states differ: {a.initial_state} vs {b.initial_state}")
    if problems:
        raise ScenarioError([f"cannot cross-validate {a.name!r} with {b.name!r}: {p}" for p in problems])


def _run_with(s: Scenario, seed: int, threads: int, **options) -> EngineResult:
    run = _point_run(s, {}, seed, threads)
    run.options = registry.resolve_options(s.engine, {**run.options, **options})
    return registry.run_engine(s.engine, run)


def _ito_vs_lindblad(ito: Scenario, lindblad: Scenario, threads: int) -> CrossValidationReport:
    _require_same(ito, lindblad)
    result = _run_with(ito, ito.seed, threads, compare_lindblad=True, d=lindblad.engine_options["d"])
    return CrossValidationReport(("ito", "lindblad"), "trace_distance_final",
                                 result.summary["trace_distance_final"], 0.05)


def _lindblad_vs_oracles(lindblad: Scenario, oracles: Scenario, threads: int) -> CrossValidationReport:
    _require_same(lindblad, oracles)
    if lindblad.model_params().dims != 1:
        raise ScenarioError(["lindblad/oracles cross-validation is one-dimensional, set params.dims to 1"])
    engine = _run_with(lindblad, lindblad.seed, threads).tables["series"]
    oracle = _run_with(oracles, oracles.seed, threads, quantity="moments").tables["series"]
    error = max(relative_error(np.array(engine.column(k)), np.array(oracle.column(k)))
                for k in ("Q", "P", "Q2", "QP", "P2"))
    return CrossValidationReport(("lindblad", "oracles"), "max_relative_moment_error", error, 1e-3)


def _grid_vs_oracles(grid: Scenario, oracles: Scenario, threads: int) -> CrossValidationReport:
    _require_same(grid, oracles, times=False)
    fit = _run_with(grid, grid.seed, threads).summary
    oracle = _run_with(oracles, oracles.seed, threads, quantity="decoherence", deltaQ=fit["deltaQ"]).summary
    error = abs(fit["zeta_fit"] - oracle["zeta"]) / oracle["zeta"]
    return CrossValidationReport(("grid", "oracles"), "zeta_relative_error", error, 0.05)


_PAIRS = {
    ("ito", "lindblad"): _ito_vs_lindblad,
    ("lindblad", "oracles"): _lindblad_vs_oracles,
    ("grid", "oracles"): _grid_vs_oracles,
}


def cross_validate(first: Scenario, second: Scenario, threads: Optional[int] = None) -> CrossValidationReport:
    """Compare two engines on matching scenarios.

    Raises:
        ScenarioError: unsupported engine pair, sweeps, or mismatched scenarios
    """
    a, b = sorted((first, second), key=lambda s: s.engine)
    pair = (a.engine, b.engine)
    if pair not in _PAIRS:
        supported = ", ".join("/".join(p) for p in _PAIRS)
        raise ScenarioError([f"no cross-validation for engines {pair[0]}/{pair[1]} (supported: {supported})"])
    if a.sweep or b.sweep:
        raise ScenarioError(["cross-validation needs single-point scenarios"])
    report = _PAIRS[pair](a, b, threads or lab_config.DEFAULT_THREADS)
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"{pair[0]}/{pair[1]}: {report.metric} = {report.value:.3e} "
                      f"(tolerance {report.tolerance:g}) {'passed' if report.passed else 'FAILED'}")
    return report

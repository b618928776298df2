# cbrlab/registry.py
import difflib
import importlib
import logging
import pkgutil
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

import cbrlab.engines as engines_pkg
from cbrlab.errors import ScenarioError
from cbrlab.physics.fock_algebra import ModelParams
from cbrlab.utils.tables import Table

# Configure logging
logger = logging.getLogger(__name__)

_JSON_TYPES = {
    "number": (int, float),
    "integer": (int,),
    "boolean": (bool,),
    "string": (str,),
    "array": (list, tuple),
}


@dataclass
class EngineRun:
    """Everything an engine needs for one parameter point."""
    scenario: str
    params: ModelParams
    initial_state: Dict[str, Any]
    times: Optional[np.ndarray]
    options: Dict[str, Any]
    seed: int
    threads: int = 1


@dataclass
class EngineResult:
    """Tables keyed by file stem plus scalar summary values.

    units maps summary keys to dimension keys (see engines.common). Sweeps
    keep only the summary; single runs write every table and snapshot.
    """
    tables: Dict[str, Table] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    units: Dict[str, str] = field(default_factory=dict)
    snapshots: Dict[str, Any] = field(default_factory=dict)


class EngineRegistry:
    def __init__(self):
        self.engines: Dict[str, Dict] = {}
        self.failed: Dict[str, str] = {}
        self._loaded = False

    def register(self, name: str, description: str, option_schema: dict, outputs: Dict[str, str],
                 needs_time: bool = True):
        """Decorator to register an engine handler.

        option_schema is a JSON-schema style object whose properties carry
        "type", "default" and optionally "enum"; outputs maps every
        observable the engine can emit to its unit.
        """
        def decorator(func: Callable[[EngineRun], EngineResult]):
            self.engines[name] = {
                "description": description,
                "option_schema": option_schema,
                "outputs": outputs,
                "needs_time": needs_time,
                "handler": func,
            }
            return func
        return decorator

    def get(self, name: str) -> Dict:
        self.load_engines()
        if name not in self.engines:
            if name in self.failed:
                raise ScenarioError([f"engine {name!r} failed to load: {self.failed[name]}"])
            close = difflib.get_close_matches(name, list(self.engines), n=1)
            hint = f" (did you mean {close[0]!r}?)" if close else ""
            if self.failed:
                hint += f"; modules that failed to load: {', '.join(sorted(self.failed))}"
            raise ScenarioError([f"unknown engine {name!r}{hint}"])
        return self.engines[name]

    def resolve_options(self, name: str, options: Dict[str, Any]) -> Dict[str, Any]:
        """Validate engine options against the schema and fill in defaults."""
        properties = self.get(name)["option_schema"].get("properties", {})
        errors: List[str] = []
        resolved: Dict[str, Any] = {}
        lowered = {key.lower(): key for key in properties}
        for key, value in options.items():
            if key not in properties:
                close = difflib.get_close_matches(key.lower(), list(lowered), n=1)
                hint = f" (did you mean {lowered[close[0]]!r}?)" if close else ""
                errors.append(f"engine_options: unknown option {key!r} for engine {name!r}{hint}")
                continue
            problem = _check_option(key, value, properties[key])
            if problem:
                errors.append(f"engine_options.{key}: {problem}")
            else:
                resolved[key] = value
        if errors:
            raise ScenarioError(errors)
        for key, spec in properties.items():
            resolved.setdefault(key, spec.get("default"))
        return resolved

    def run_engine(self, name: str, run: EngineRun) -> EngineResult:
        """Call a registered engine"""
        handler = self.get(name)["handler"]
        logger.debug(f"Running engine {name} for scenario {run.scenario}")
        return handler(run)

    def load_engines(self):
        """Dynamically discover and import all engine modules"""
        if self._loaded:
            return
        self._loaded = True
        for _, module_name, _ in pkgutil.iter_modules(engines_pkg.__path__):
            full_name = f"{engines_pkg.__name__}.{module_name}"
            try:
                importlib.import_module(full_name)
                logger.debug(f"Loaded engine module: {module_name}")
            except Exception as e:
                logger.error(f"Error loading {module_name}: {e}")
                self.failed[module_name] = f"{type(e).__name__}: {e}"

        logger.debug(f"Available engines: {list(self.engines.keys())}")


def _check_option(key: str, value: Any, spec: dict) -> Optional[str]:
    if value is None:
        return None if spec.get("default") is None else "must not be null"
    expected = spec.get("type")
    if expected:
        types = _JSON_TYPES[expected]
        if isinstance(value, bool) and expected != "boolean":
            return f"expected {expected}, got a boolean"
        if not isinstance(value, types):
            return f"expected {expected}, got {type(value).__name__}"
    if "enum" in spec and value not in spec["enum"]:
        return f"must be one of {spec['enum']}, got {value!r}"
    if "minimum" in spec and value < spec["minimum"]:
        return f"must be >= {spec['minimum']}, got {value!r}"
    return None


# Global registry instance
registry = EngineRegistry()

# cbrlab/utils/tables.py
"""CSV tables with `name[unit]` headers and JSON manifests."""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

# Configure logging
logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"


@dataclass
class Table:
    """Column-labelled rows; columns are (name, unit) pairs."""
    name: str
    columns: List[Tuple[str, str]]
    rows: List[List[Any]] = field(default_factory=list)

    def add_row(self, values: Sequence[Any]):
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name}: row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> List[Any]:
        names = [c for c, _ in self.columns]
        if name not in names:
            raise KeyError(f"Unknown column: {name}. Available: {names}")
        index = names.index(name)
        return [row[index] for row in self.rows]

    def select(self, keep: Sequence[str]) -> "Table":
        """Copy with the first column plus the named columns, in table order."""
        wanted = set(keep)
        indices = [0] + [i for i, (c, _) in enumerate(self.columns) if i > 0 and c in wanted]
        return Table(
            name=self.name,
            columns=[self.columns[i] for i in indices],
            rows=[[row[i] for i in indices] for row in self.rows],
        )

    def sort(self, key_columns: int = 1):
        self.rows.sort(key=lambda row: tuple(_sort_key(v) for v in row[:key_columns]))


def _sort_key(value):
    if isinstance(value, (int, float, np.integer, np.floating)):
        return (0, float(value), "")
    return (1, 0.0, str(value))


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, FLOAT_FORMAT)
    if value is None:
        return ""
    return str(value)


def header(columns: Sequence[Tuple[str, str]]) -> List[str]:
    return [f"{name}[{unit}]" for name, unit in columns]


def write_csv(table: Table, path: Path) -> Path:
    """Write ``table`` as RFC-4180 CSV with a `name[unit]` header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header(table.columns))
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    logger.debug(f"Wrote {len(table.rows)} rows to {path}")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(data: Dict[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return path

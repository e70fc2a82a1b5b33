"""
Reading and writing experiment artifacts.

Config files are flat ``key = value`` text with dotted keys for nested specs.
Tables are CSV, with floats printed to 17 significant digits, or JSON; both
parse back to the same doubles.
"""

import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from ..exceptions import ConfigError, DimensionMismatchError, IoError
from ..models.config import PRESETS, ExperimentConfig
from ..models.domain import MetaDataset, Task
from ..models.results import EXACT_COLUMNS, SUMMARY_COLUMNS, ExperimentResult, SummaryRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# Config files

def _parse_scalar(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_value(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [_parse_scalar(part) for part in text.split(",") if part.strip()]
    return text


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse flat ``a.b = value`` lines into a nested dictionary.

    Values are read as JSON when possible, then as comma-separated lists,
    then as bare strings. ``#`` starts a comment line.
    """
    tree: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        parts = [part.strip() for part in key.strip().split(".")]
        if not all(parts):
            raise ConfigError(f"line {number}: malformed key {key.strip()!r}")
        node = tree
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"line {number}: {part!r} is both a value and a section")
            node = child
        if parts[-1] in node:
            raise ConfigError(f"line {number}: duplicate key {key.strip()!r}")
        node[parts[-1]] = _parse_value(value)
    return tree


def config_from_mapping(mapping: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(mapping)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment configuration: {exc}") from exc


def load_config(path: PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    config = config_from_mapping(parse_config_text(text))
    logger.info("Loaded config", extra={"path": str(path), "experiment": config.name})
    return config


def resolve_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return config_from_mapping(PRESETS[name])


# Tables

def format_value(value: Any) -> str:
    """17-significant-digit floats, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    """Plain Python value for json.dumps; non-finite floats become null."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def _json_object(record: Dict[str, Any], columns: Sequence[str]) -> Dict[str, Any]:
    return {c: _json_value(record.get(c)) for c in columns}


def _records(rows: Iterable[BaseModel]) -> List[Dict[str, Any]]:
    return [row.model_dump(by_alias=True) for row in rows]


def render_table(records: Sequence[Dict[str, Any]], columns: Sequence[str], fmt: str = "csv",
                 extra: Optional[Dict[str, Sequence[Dict[str, Any]]]] = None) -> str:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for record in records:
            writer.writerow([format_value(record.get(c)) for c in columns])
        return buffer.getvalue()
    if fmt == "json":
        # repr of a float round-trips, so json.dumps keeps every double exact
        document: Dict[str, Any] = {"rows": [_json_object(r, columns) for r in records]}
        for name, items in (extra or {}).items():
            document[name] = [_json_object(item, list(item.keys())) for item in items]
        return json.dumps(document, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}; expected csv or json")


def _write_text(text: str, path: Optional[PathLike], stream: Optional[TextIO] = None):
    if path is None:
        (stream or sys.stdout).write(text)
        return
    try:
        target = Path(path)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    logger.info("Wrote output", extra={"path": str(path), "bytes": len(text)})


def summary_columns(rows: Sequence[SummaryRow], include_exact: Optional[bool] = None) -> List[str]:
    if include_exact is None:
        include_exact = any(r.risk_estimated_exact is not None for r in rows)
    return SUMMARY_COLUMNS + (EXACT_COLUMNS if include_exact else [])


def emit(results: Union[ExperimentResult, Sequence[SummaryRow]], fmt: str = "csv",
         path: Optional[PathLike] = None, include_exact: Optional[bool] = None,
         stream: Optional[TextIO] = None) -> str:
    """Write summary rows as CSV or JSON to ``path`` (stdout when None); returns the text."""
    if isinstance(results, ExperimentResult):
        rows, failures = results.rows, results.failures
    else:
        rows, failures = list(results), []
    columns = summary_columns(rows, include_exact)
    extra = {"failures": _records(failures)} if fmt == "json" else None
    text = render_table(_records(rows), columns, fmt, extra)
    _write_text(text, path, stream)
    return text


def write_table(rows: Sequence[BaseModel], columns: Sequence[str], fmt: str = "csv",
                path: Optional[PathLike] = None, stream: Optional[TextIO] = None) -> str:
    """Write risk-curve or c-sweep rows with the given column order."""
    text = render_table(_records(rows), columns, fmt)
    _write_text(text, path, stream)
    return text


def read_summary_csv(path_or_text: str, from_text: bool = False) -> List[SummaryRow]:
    text = path_or_text if from_text else Path(path_or_text).read_text(encoding="utf-8")
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        rows.append(SummaryRow(**{k: (v if v != "" else None) for k, v in record.items()}))
    return rows


# Matrices and task archives

def write_matrix(M: np.ndarray, path: Optional[PathLike] = None, stream: Optional[TextIO] = None) -> str:
    """Dense whitespace-separated text, one matrix row per line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    text = "".join(" ".join(format(float(x), ".17g") for x in row) + "\n" for row in M)
    _write_text(text, path, stream)
    return text


def write_task_archive(data: MetaDataset, path: PathLike):
    """Header ``p L``, then per task a line ``n`` followed by n rows of x then y."""
    lines = [f"{data.p} {data.L}"]
    for task in data.tasks:
        lines.append(str(task.n))
        for x_row, y_value in zip(task.X, task.y):
            lines.append(" ".join(format(float(v), ".17g") for v in (*x_row, y_value)))
    _write_text("\n".join(lines) + "\n", path)


def read_task_archive(path: PathLike, sigma2: float = 0.0) -> MetaDataset:
    try:
        tokens = Path(path).read_text(encoding="utf-8").split("\n")
    except OSError as exc:
        raise IoError(f"cannot read task archive {path}: {exc}") from exc
    lines = [line.strip() for line in tokens if line.strip()]
    if not lines:
        raise IoError(f"task archive {path} is empty")
    try:
        p, L = (int(v) for v in lines[0].split())
        cursor = 1
        tasks = []
        for _ in range(L):
            n = int(lines[cursor])
            cursor += 1
            block = np.array([[float(v) for v in lines[cursor + i].split()] for i in range(n)])
            cursor += n
            if block.shape != (n, p + 1):
                raise DimensionMismatchError(f"task {len(tasks)}: expected {n}×{p + 1} values, got {block.shape}")
            tasks.append(Task(X=block[:, :p], y=block[:, p]))
    except (ValueError, IndexError) as exc:
        raise IoError(f"malformed task archive {path}: {exc}") from exc
    if cursor != len(lines):
        raise IoError(f"task archive {path} has {len(lines) - cursor} trailing lines")
    return MetaDataset(tuple(tasks), sigma2)

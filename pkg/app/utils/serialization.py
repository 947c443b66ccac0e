"""JSON and CSV codecs for matrices, point sets, tables and results"""
import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from app.models.errors import DimensionError, InvalidTableError, UsageError
from app.models.schemas import MatrixPayload
from app.utils.linalg import ComplexMatrix, UnitaryMatrix, check_unitary

CURVE_COLUMNS = ("t", "estimate", "ci_low", "ci_high", "lower_bound")

PathLike = Union[str, Path]


def read_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"input file not found: {path}", flag=str(path)) from exc
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}", flag=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})", flag=str(path)) from exc


def write_json(path: PathLike, data: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(data))
        fh.write("\n")


def _plain(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    if isinstance(data, list):
        return [_plain(item) for item in data]
    if isinstance(data, dict):
        return {key: _plain(value) for key, value in data.items()}
    if isinstance(data, np.generic):
        return data.item()
    if isinstance(data, np.ndarray):
        return data.tolist()
    return data


def dumps(data: Any) -> str:
    """Stable JSON text: models dumped in json mode, keys in model order"""
    return json.dumps(_plain(data), indent=2, allow_nan=False)


# Matrices

def matrix_from_payload(data: Dict[str, Any]) -> ComplexMatrix:
    try:
        payload = MatrixPayload.model_validate(data)
    except ValidationError as exc:
        raise DimensionError("invalid matrix payload", detail=str(exc)) from exc
    return ComplexMatrix(np.asarray(payload.re, dtype=float) + 1j * np.asarray(payload.im, dtype=float))


def matrix_to_payload(matrix: Union[ComplexMatrix, UnitaryMatrix, np.ndarray]) -> Dict[str, Any]:
    arr = matrix.array if isinstance(matrix, UnitaryMatrix) else np.asarray(getattr(matrix, "entries", matrix))
    return MatrixPayload(n=arr.shape[0], re=arr.real.tolist(), im=arr.imag.tolist()).model_dump()


def load_unitary(path: PathLike) -> UnitaryMatrix:
    return check_unitary(matrix_from_payload(read_json(path)).entries)


def load_unitary_set(path: PathLike) -> List[UnitaryMatrix]:
    """A JSON list of matrix payloads, {"matrices": [...]}, or a directory of *.json files in name order"""
    if Path(path).is_dir():
        files = sorted(Path(path).glob("*.json"))
        if not files:
            raise UsageError(f"{path} contains no .json files", flag=str(path))
        return [m for file in files for m in _matrices_in(read_json(file), file, single_ok=True)]
    return _matrices_in(read_json(path), path)


def _matrices_in(data: Any, path: PathLike, single_ok: bool = False) -> List[UnitaryMatrix]:
    if single_ok and isinstance(data, dict) and "matrices" not in data:
        data = [data]
    if isinstance(data, dict):
        data = data.get("matrices")
    if not isinstance(data, list):
        raise UsageError(f"{path} must hold a list of matrices", flag=str(path))
    return [check_unitary(matrix_from_payload(item).entries) for item in data]


def dump_unitary_set(path: PathLike, matrices: Sequence[UnitaryMatrix]) -> None:
    write_json(path, {"matrices": [matrix_to_payload(m) for m in matrices]})


# Torus points

def load_points(path: PathLike) -> List[List[float]]:
    """A JSON list of points; scalars are read as 1-d points"""
    data = read_json(path)
    if isinstance(data, dict):
        data = data.get("alphas", data.get("points"))
    if not isinstance(data, list) or not data:
        raise UsageError(f"{path} must hold a non-empty list of points", flag=str(path))
    return [[float(v)] if isinstance(v, (int, float)) else [float(x) for x in v] for v in data]


# Finite action tables

def load_table(path: PathLike) -> Dict[str, Any]:
    data = read_json(path)
    if not isinstance(data, dict):
        raise InvalidTableError(f"{path} must hold an object with mul, act and dist")
    return data


# CSV

def rows_to_csv(rows: Iterable[BaseModel], columns: Sequence[str] = CURVE_COLUMNS) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = row.model_dump() if isinstance(row, BaseModel) else row
        writer.writerow([repr(float(values[c])) for c in columns])
    return buffer.getvalue()


def parse_int_list(text: str, flag: str) -> List[int]:
    """'10,10' -> [10, 10]"""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"--{flag} must be a comma-separated list of integers, got '{text}'", flag=flag) from exc

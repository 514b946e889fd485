"""JSON input parsing and deterministic JSON output.

Space:     {"cube": n}  or  {"factors": [{"atoms": [...], "probs": [...]}, ...]}
Function:  {"table": [...]}  (flat, coordinate 0 least significant)
           {"walsh": [{"subset": [i, ...], "coef": a}, ...]}  (uniform cube)
           {"builtin": {"name": ..., "params": {...}}}
Matrix:    {"dimension": n, "data": [row-major n*n entries]}
Vector:    {"dimension": n, "data": [...]}  or a plain list
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import generators
from .product_space import Factor, GridFunction, ProductSpace, SpaceError, monomial


class InputError(ValueError):
    """Malformed or invalid user input."""


def load_json(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_space(obj) -> ProductSpace:
    if not isinstance(obj, dict):
        raise InputError("space: expected a JSON object")
    try:
        if "cube" in obj:
            n = obj["cube"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise InputError("space: 'cube' must be a positive integer")
            return ProductSpace.cube(n)
        factors = _require(obj, "factors", "space")
        if not isinstance(factors, list) or not factors:
            raise InputError("space: 'factors' must be a nonempty list")
        return ProductSpace(tuple(
            Factor(tuple(_require(fac, "atoms", f"factor {k}")), tuple(_require(fac, "probs", f"factor {k}")))
            for k, fac in enumerate(factors)
        ))
    except (SpaceError, TypeError) as exc:
        raise InputError(f"space: {exc}") from exc


def _builtin(space: ProductSpace, name: str, params: dict) -> GridFunction:
    if name == "monomial":
        return monomial(space, params.get("subset", []), bool(params.get("centered", False)))
    if name == "chaos":
        acc = GridFunction.constant(space, 0.0)
        for term in params.get("terms", []):
            acc = acc + float(term["coef"]) * monomial(space, term["subset"], centered=True)
        return acc
    if name == "random_chaos":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        return generators.random_chaos(space, params.get("degrees", [2]), rng, params.get("terms"))
    if name == "random":
        return generators.random_function(space, np.random.default_rng(int(params.get("seed", 0))))
    raise InputError(f"function: unknown builtin {name!r} (monomial, chaos, random_chaos, random)")


def parse_function(obj, space: ProductSpace) -> GridFunction:
    if not isinstance(obj, dict):
        raise InputError("function: expected a JSON object")
    try:
        if "table" in obj:
            table = obj["table"]
            if not isinstance(table, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in table
            ):
                raise InputError("function: 'table' must be a list of numbers")
            return GridFunction(space, np.array(table, dtype=float))
        if "walsh" in obj:
            coefs = {}
            for term in obj["walsh"]:
                s = frozenset(_require(term, "subset", "walsh term"))
                coefs[s] = coefs.get(s, 0.0) + float(_require(term, "coef", "walsh term"))
            return GridFunction(space, walsh=coefs)
        if "builtin" in obj:
            spec = obj["builtin"]
            return _builtin(space, _require(spec, "name", "builtin"), spec.get("params", {}))
    except (SpaceError, TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"function: {exc}") from exc
    raise InputError("function: expected one of 'table', 'walsh', 'builtin'")


def parse_matrix(obj) -> np.ndarray:
    n = _require(obj, "dimension", "matrix")
    data = _require(obj, "data", "matrix")
    if not isinstance(n, int) or n < 1 or not isinstance(data, list) or len(data) != n * n:
        raise InputError("matrix: 'data' must hold dimension^2 numbers in row-major order")
    try:
        return np.array(data, dtype=float).reshape(n, n)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix: {exc}") from exc


def parse_vector(obj) -> np.ndarray:
    data = obj.get("data") if isinstance(obj, dict) else obj
    if not isinstance(data, list):
        raise InputError("vector: expected a list or {'dimension', 'data'}")
    if isinstance(obj, dict) and obj.get("dimension", len(data)) != len(data):
        raise InputError("vector: 'dimension' does not match data length")
    try:
        return np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"vector: {exc}") from exc


def jsonable(x):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def fmt_float(x: float) -> str:
    """17 significant digits, always recognizably a float."""
    s = format(x, ".17g")
    return s if "." in s or "e" in s else s + ".0"


def _encode(x, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return fmt_float(x)
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(isinstance(v, (int, float)) or v is None for v in x):
            return "[" + ", ".join(_encode(v, 0) for v in x) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in x) + "\n" + pad + "]"
    if not x:
        return "{}"
    items = (inner + json.dumps(k) + ": " + _encode(v, indent + 1) for k, v in x.items())
    return "{\n" + ",\n".join(items) + "\n" + pad + "}"


def dumps(obj) -> str:
    """Deterministic JSON; floats carry 17 significant digits, non-finite ones become null."""
    return _encode(jsonable(obj), 0)


def csv_line(fields) -> str:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return fmt_float(v)
        return str(v)
    return ",".join(fmt(v) for v in fields)

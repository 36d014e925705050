"""JSON schemas, loaders and a deterministic writer.

Floats are written with 17 significant digits, complex numbers as
``{"re": .., "im": ..}`` and complex matrices as ``{"re": [[..]], "im": [[..]]}``.
Non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InputError
from .symbols import PolynomialSymbol
from .symplectic import QuadraticForm

_NUM = {"type": "number"}
_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}

_TERM = {
    "type": "object",
    "properties": {"alpha": _INT_LIST, "beta": _INT_LIST, "re": _NUM, "im": _NUM},
    "required": ["alpha", "beta"],
    "additionalProperties": False,
}
_TERMS = {"type": "array", "items": _TERM}

QUADRATIC_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "name": {"type": "string"},
        "coeffs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"mono": _INT_LIST, "re": _NUM, "im": _NUM},
                "required": ["mono"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["n", "coeffs"],
    "additionalProperties": False,
}

SYMBOL_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "name": {"type": "string"},
        "terms": _TERMS,
        "subprincipal": {
            "oneOf": [
                _TERMS,
                {
                    "type": "object",
                    "properties": {"terms": _TERMS},
                    "required": ["terms"],
                    "additionalProperties": False,
                },
            ]
        },
        "seeds": {"type": "array", "items": _VEC},
    },
    "required": ["n", "terms"],
    "additionalProperties": False,
}

PROP1_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "minimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "T_sweep": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "grid": {
            "type": "object",
            "properties": {
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "angular": {"type": "integer", "minimum": 0},
                "r_max": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_RANGE = {"type": "array", "items": [_NUM, _NUM, {"type": "integer", "minimum": 0}], "minItems": 3, "maxItems": 3}

SCAN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "z_grid": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"re": _RANGE, "im": _RANGE},
                    "required": ["re", "im"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "circle": {
                            "type": "object",
                            "properties": {
                                "center": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                                "radius": {"type": "number", "minimum": 0},
                                "points": {"type": "integer", "minimum": 0},
                            },
                            "required": ["center", "radius", "points"],
                            "additionalProperties": False,
                        }
                    },
                    "required": ["circle"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"points": {"type": "array", "items": {"type": "array", "items": _NUM}}},
                    "required": ["points"],
                    "additionalProperties": False,
                },
            ]
        },
        "h": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "levels": {"type": "integer", "minimum": 4},
        "margin": {"type": "number", "minimum": 0},
        "C_bound": {"type": "number", "exclusiveMinimum": 0},
        "scales": {"oneOf": [{"type": "string", "enum": ["auto", "unit"]}, _VEC]},
        "tol_conv": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["z_grid"],
    "additionalProperties": False,
}

POINTS_SCHEMA = {
    "type": "object",
    "properties": {"points": {"type": "array", "items": _VEC, "minItems": 1}},
    "required": ["points"],
    "additionalProperties": False,
}

# reports: a common envelope; per-command bodies are checked for required keys
REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"type": "string"},
        "version": {"type": "string"},
        "config": {"type": "object"},
        "result": {"type": "object"},
    },
    "required": ["command", "version", "config", "result"],
    "additionalProperties": False,
}

RESULT_REQUIRED = {
    "analyze-quadratic": ["n", "Q", "F", "singular_space", "admissible", "partially_elliptic"],
    "spectrum": ["radius", "generators", "points"],
    "deform": ["T", "A", "G", "residual", "records"],
    "weight": ["epsilon", "T", "centers", "values"],
    "certify-prop1": ["epsilon", "delta", "T", "passed", "items", "grid"],
    "scan-resolvent": ["csv", "C0_fit", "entries", "unconverged"],
    "verify-identities": ["passed", "checks"],
}


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    if all(c not in s for c in ".en"):
        s += ".0"
    return s


def to_jsonable(obj):
    """Numpy-aware conversion; complex values become {"re", "im"} records."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": to_jsonable(obj.real.tolist()), "im": to_jsonable(obj.imag.tolist())}
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text (sorted keys, fixed float format)."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(o[k], level + 1)}" for k in sorted(o)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt(o)
        if o is None:
            return "null"
        return json.dumps(o)

    return enc(to_jsonable(obj), 0) + "\n"


def validate(doc, schema, what: str) -> None:
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise InputError(f"{what}: field {where}: {e.message}")


def validate_report(report: dict) -> None:
    validate(report, REPORT_SCHEMA, "report")
    missing = [k for k in RESULT_REQUIRED.get(report["command"], []) if k not in report["result"]]
    if missing:
        raise InputError(f"report for {report['command']} is missing {missing}")


def load_json(path, schema=None, what: str = "input"):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if schema is not None:
        validate(doc, schema, str(p))
    return doc


def quadratic_from_doc(doc: dict) -> QuadraticForm:
    n = doc["n"]
    terms = [(c["mono"], complex(c.get("re", 0.0), c.get("im", 0.0))) for c in doc["coeffs"]]
    return QuadraticForm.from_monomials(n, terms)


def quadratic_to_doc(q: QuadraticForm) -> dict:
    coeffs = []
    d = 2 * q.n
    for i in range(d):
        for j in range(i, d):
            c = q.Q[i, i] if i == j else 2 * q.Q[i, j]
            if c != 0:
                mono = [0] * d
                mono[i] += 1
                mono[j] += 1
                coeffs.append({"mono": mono, "re": float(c.real), "im": float(c.imag)})
    return {"n": q.n, "coeffs": coeffs}


def symbol_from_doc(doc: dict):
    """(p0, p1 or None, seeds as an array or None)."""
    n = doc["n"]
    p0 = PolynomialSymbol.from_terms(n, doc["terms"])
    sub = doc.get("subprincipal")
    p1 = None
    if sub is not None:
        p1 = PolynomialSymbol.from_terms(n, sub["terms"] if isinstance(sub, dict) else sub)
    seeds = None
    if "seeds" in doc:
        seeds = np.asarray(doc["seeds"], dtype=float)
        if seeds.ndim != 2 or seeds.shape[1] != 2 * n:
            raise InputError(f"seeds must be points with {2 * n} coordinates")
    return p0, p1, seeds


def z_grid_from_doc(spec: dict) -> list[complex]:
    if "points" in spec:
        pts = spec["points"]
        if any(len(p) != 2 for p in pts):
            raise InputError("z points must be [re, im] pairs")
        return [complex(a, b) for a, b in pts]
    if "circle" in spec:
        c = spec["circle"]
        k = c["points"]
        t = 2 * np.pi * np.arange(k) / max(k, 1)
        z0 = complex(*c["center"])
        return [z0 + c["radius"] * np.exp(1j * s) for s in t]
    re = np.linspace(*spec["re"][:2], spec["re"][2])
    im = np.linspace(*spec["im"][:2], spec["im"][2])
    return [complex(a, b) for b in im for a in re]

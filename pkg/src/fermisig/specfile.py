"""JSON domain spec files: parsing, validation and canonical printing.

A spec is a JSON object with ``schema_version`` and ``kind``::

    {"schema_version": 1, "kind": "simple", "breakpoints": [0, 1], "incidence": [[true]]}
    {"schema_version": 1, "kind": "graph", "b": 1,
     "t_plus": [[0, 0], [0.5, 0.5], [1, 0]], "t_minus": "0"}
    {"schema_version": 1, "kind": "conformal", "base": {...simple or graph...},
     "f": "1 + 0.3*sin(3.141592653589793*x)*exp(-t^2)"}

Graph boundaries are polylines ``[[x, T], ...]`` or expressions in ``x``
(sampled at ``samples`` equally spaced points, default 257).  A conformal
factor is an expression in ``t`` and ``x`` or a grid
``{"t": [...], "x": [...], "values": [[...]]}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ExprSyntaxError, InvariantViolation, SchemaError, SpecSyntaxError, UnknownFunction
from .expr import parse_expression
from .geometry import ConformalDomain, GraphDomain, GridField, SimpleDomain, validate_domain

SCHEMA_VERSION = 1
DEFAULT_SAMPLES = 257


@dataclass(frozen=True)
class DomainSpecFile:
    schema_version: int
    kind: str
    payload: dict
    domain: object

    def __eq__(self, other):
        return (isinstance(other, DomainSpecFile) and self.schema_version == other.schema_version
                and self.kind == other.kind and self.payload == other.payload)

    def __hash__(self):
        return hash((self.schema_version, self.kind, json.dumps(self.payload, sort_keys=True)))


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise SchemaError(where.rstrip(".") or "<root>", "expected an object")
    if key not in obj:
        raise SchemaError(f"{where}{key}", "missing")
    return obj[key]


def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(field, f"expected a number, got {value!r}")
    return float(value)


def _expression(text, field):
    if not isinstance(text, str):
        raise SchemaError(field, "expected an expression string")
    try:
        return parse_expression(text)
    except (ExprSyntaxError, UnknownFunction) as exc:
        raise SchemaError(field, str(exc)) from exc


def _canonical_number(v):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2 ** 53 else v


def _polyline(value, field):
    if not isinstance(value, list) or len(value) < 2:
        raise SchemaError(field, "expected a list of at least two [x, T] pairs")
    pts = []
    for i, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"{field}[{i}]", "expected [x, T]")
        pts.append([_number(pair[0], f"{field}[{i}][0]"), _number(pair[1], f"{field}[{i}][1]")])
    return pts


def _boundary(value, b, samples, field):
    """(normalized payload value, polyline array)."""
    if isinstance(value, str):
        e = _expression(value, field)
        xs = np.linspace(0.0, b, samples)
        try:
            ts = e(np.zeros_like(xs), xs)
        except Exception as exc:  # noqa: BLE001 - reported against the field
            raise SchemaError(field, f"cannot evaluate: {exc}") from exc
        return str(e), np.column_stack([xs, ts])
    pts = _polyline(value, field)
    return [[_canonical_number(x), _canonical_number(t)] for x, t in pts], np.array(pts)


def _build_flat(obj, where):
    kind = _require(obj, "kind", where)
    if kind == "simple":
        bp = _require(obj, "breakpoints", where)
        inc = _require(obj, "incidence", where)
        if not isinstance(bp, list) or len(bp) < 2:
            raise SchemaError(f"{where}breakpoints", "expected at least two numbers")
        xb = [_number(v, f"{where}breakpoints[{i}]") for i, v in enumerate(bp)]
        K = len(xb) - 1
        if (not isinstance(inc, list) or len(inc) != K
                or any(not isinstance(r, list) or len(r) != K for r in inc)):
            raise SchemaError(f"{where}incidence", f"expected a {K}x{K} boolean matrix")
        if any(not isinstance(c, bool) for r in inc for c in r):
            raise SchemaError(f"{where}incidence", "entries must be true or false")
        payload = {"kind": "simple", "breakpoints": [_canonical_number(v) for v in xb],
                   "incidence": [list(r) for r in inc]}
        return payload, SimpleDomain(xb, inc)
    if kind == "graph":
        b = _number(_require(obj, "b", where), f"{where}b")
        if not b > 0:
            raise SchemaError(f"{where}b", "must be positive")
        samples = obj.get("samples", DEFAULT_SAMPLES)
        if isinstance(samples, bool) or not isinstance(samples, int) or samples < 3:
            raise SchemaError(f"{where}samples", "expected an integer >= 3")
        p_val, plus = _boundary(_require(obj, "t_plus", where), b, samples, f"{where}t_plus")
        m_val, minus = _boundary(_require(obj, "t_minus", where), b, samples, f"{where}t_minus")
        payload = {"kind": "graph", "b": _canonical_number(b), "t_plus": p_val, "t_minus": m_val}
        if samples != DEFAULT_SAMPLES:
            payload["samples"] = samples
        return payload, GraphDomain(b, plus, minus)
    raise SchemaError(f"{where}kind", f"unknown kind {kind!r}")


def _build(obj):
    kind = _require(obj, "kind", "")
    if kind != "conformal":
        return _build_flat(obj, "")
    base_obj = _require(obj, "base", "")
    base_payload, base = _build_flat(base_obj, "base.")
    fv = _require(obj, "f", "")
    if isinstance(fv, str):
        e = _expression(fv, "f")
        f_payload, f = str(e), e
    elif isinstance(fv, dict):
        t = [_number(v, "f.t") for v in _require(fv, "t", "f.")]
        x = [_number(v, "f.x") for v in _require(fv, "x", "f.")]
        vals = _require(fv, "values", "f.")
        if not isinstance(vals, list) or len(vals) != len(t) or any(
                not isinstance(r, list) or len(r) != len(x) for r in vals):
            raise SchemaError("f.values", "expected len(t) rows of len(x) numbers")
        grid = [[_number(v, "f.values") for v in r] for r in vals]
        f = GridField(t, x, grid)
        f_payload = {"t": [_canonical_number(v) for v in t], "x": [_canonical_number(v) for v in x],
                     "values": [[_canonical_number(v) for v in r] for r in grid]}
    else:
        raise SchemaError("f", "expected an expression string or a grid object")
    return {"kind": "conformal", "base": base_payload, "f": f_payload}, ConformalDomain(base, f)


def parse_domain_spec(text: str) -> DomainSpecFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(obj, dict):
        raise SchemaError("<root>", "expected a JSON object")
    version = _require(obj, "schema_version", "")
    if isinstance(version, bool) or not isinstance(version, int):
        raise SchemaError("schema_version", "expected an integer")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {version}")
    payload, domain = _build(obj)
    validate_domain(domain)
    return DomainSpecFile(version, payload["kind"], payload, domain)


def print_domain_spec(spec: DomainSpecFile) -> str:
    """Canonical JSON text; parse_domain_spec(print_domain_spec(s)) == s."""
    doc = {"schema_version": spec.schema_version}
    doc.update(spec.payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_domain_spec(path) -> DomainSpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse_domain_spec(fh.read())


def spec_from_domain(d) -> DomainSpecFile:
    """Spec for an in-memory simple or graph domain (conformal needs its text form)."""
    if isinstance(d, SimpleDomain):
        payload = {"kind": "simple", "breakpoints": [_canonical_number(v) for v in d.breakpoints],
                   "incidence": d.incidence.tolist()}
    elif isinstance(d, GraphDomain):
        payload = {"kind": "graph", "b": _canonical_number(d.b),
                   "t_plus": [[_canonical_number(x), _canonical_number(t)] for x, t in d.plus],
                   "t_minus": [[_canonical_number(x), _canonical_number(t)] for x, t in d.minus]}
    else:
        raise InvariantViolation("simple or graph domain", type(d).__name__)
    return parse_domain_spec(json.dumps({"schema_version": SCHEMA_VERSION, **payload}))

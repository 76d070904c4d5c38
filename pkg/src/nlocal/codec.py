"""
JSON documents for tensors, models, realizations and certificate reports.

Floats are written with 17 significant digits so every ``float64`` survives a
write/read cycle bit-exactly, and re-serializing a parsed document reproduces
the same bytes.  Arrays are stored flat together with their shape; model
tables are flattened in C order along the declared ``dims`` while tensors use
the storage layout tagged by ``layout``.
"""
from __future__ import annotations

import enum
import json
import math
from typing import Any

import numpy as np

from .certify import CertReport, Verdict
from .models import (CanonicalNLocalForm, DiscreteNLocalModel, FullExpansion,
                     TriangleModel)
from .quantum import POVMFamily, QuantumRealization, SeparableState
from .strategies import STRATEGY_ENCODING
from .tensor import LAYOUT, CorrelationTensor, Scenario

VERSION = "nlocal-json/1"
MODEL_KINDS = ("nlocal", "triangle", "canonical", "expansion")


class SchemaError(ValueError):
    pass


# serialization -------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise SchemaError(f"non-finite value {x!r} cannot be serialized")
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def _emit(obj, out: list, indent: int | None, level: int):
    obj = _plain(obj)
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ": " if indent is not None else ":"
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(pad + json.dumps(str(k)) + sep)
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        # numeric lists stay on one line
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out, None if _is_leafy(v) else indent, level + 1)
        out.append("]")
    else:
        raise SchemaError(f"cannot serialize {type(obj).__name__}")


def _is_leafy(v) -> bool:
    return not isinstance(_plain(v), dict)


def dumps(doc: Any, indent: int | None = 1) -> str:
    out: list[str] = []
    _emit(doc, out, indent, 0)
    return "".join(out) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None


# helpers -------------------------------------------------------------------------

def _arr(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "values": a.ravel().tolist()}


def _unarr(d) -> np.ndarray:
    try:
        shape = tuple(int(v) for v in d["shape"])
        vals = np.array(d["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed array record: {exc}") from None
    if vals.size != int(np.prod(shape)):
        raise SchemaError(f"array record has {vals.size} values for shape {shape}")
    return vals.reshape(shape)


def _carr(a) -> dict:
    a = np.asarray(a, dtype=complex)
    flat = a.ravel()
    return {"shape": list(a.shape),
            "values": [[float(z.real), float(z.imag)] for z in flat]}


def _uncarr(d) -> np.ndarray:
    try:
        shape = tuple(int(v) for v in d["shape"])
        pairs = np.array(d["values"], dtype=float).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed complex array record: {exc}") from None
    if pairs.shape[0] != int(np.prod(shape)):
        raise SchemaError("complex array record does not match its shape")
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(shape)


def _header(kind_type: str) -> dict:
    return {"type": kind_type, "version": VERSION}


def _check(doc, kind_type: str):
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    if doc.get("version") != VERSION:
        raise SchemaError(f"version tag {doc.get('version')!r} != {VERSION!r}")
    if doc.get("type") != kind_type:
        raise SchemaError(f"expected a {kind_type} document, got {doc.get('type')!r}")


def _scenario(doc) -> Scenario:
    try:
        return Scenario.from_dict(doc["scenario"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad scenario: {exc}") from None


# tensors -------------------------------------------------------------------------

def tensor_to_doc(t: CorrelationTensor) -> dict:
    d = _header("tensor")
    d.update(scenario=t.scenario.to_dict(), layout=LAYOUT, values=t.flat().tolist())
    return d


def tensor_from_doc(doc) -> CorrelationTensor:
    _check(doc, "tensor")
    if doc.get("layout") != LAYOUT:
        raise SchemaError(f"layout tag {doc.get('layout')!r} != {LAYOUT!r}")
    s = _scenario(doc)
    vals = np.array(doc.get("values", []), dtype=float)
    if vals.ndim != 1 or vals.size != int(np.prod(s.shape)):
        raise SchemaError(f"tensor needs {int(np.prod(s.shape))} values")
    return CorrelationTensor(s, vals)


# models --------------------------------------------------------------------------

def model_to_doc(m) -> dict:
    d = _header("model")
    if isinstance(m, DiscreteNLocalModel):
        d.update(kind="nlocal", scenario=m.scenario.to_dict(),
                 source_dims=list(m.source_dims),
                 source_dists=[q.tolist() for q in m.source_dists],
                 edge_responses=[_arr(e) for e in m.edge_responses],
                 hub_response=_arr(m.hub_response),
                 dims={"edge_responses": ["lambda_i", "x_i", "a_i"],
                       "hub_response": ["lambda_1..lambda_n", "y", "b"]})
    elif isinstance(m, CanonicalNLocalForm):
        d.update(kind="canonical", scenario=m.scenario.to_dict(),
                 strategy_encoding=STRATEGY_ENCODING,
                 strategy_dists=[p.tolist() for p in m.strategy_dists],
                 hub_table=_arr(m.hub_table),
                 dims={"hub_table": ["k_1..k_n", "y", "b"]})
    elif isinstance(m, FullExpansion):
        d.update(kind="expansion", scenario=m.scenario.to_dict(),
                 strategy_encoding=STRATEGY_ENCODING,
                 strategy_dists=[p.tolist() for p in m.strategy_dists],
                 hub_strategy_dists=_arr(m.hub_strategy_dists),
                 dims={"hub_strategy_dists": ["k_1..k_n", "j"]})
    elif isinstance(m, TriangleModel):
        d.update(kind="triangle",
                 source_dists=[q.tolist() for q in m.source_dists],
                 response_A=_arr(m.response_A), response_B=_arr(m.response_B),
                 response_C=_arr(m.response_C),
                 dims={"response_A": ["lambda_3", "lambda_1", "a"],
                       "response_B": ["lambda_1", "lambda_2", "b"],
                       "response_C": ["lambda_2", "lambda_3", "c"]})
    else:
        raise SchemaError(f"not a model: {type(m).__name__}")
    return d


def model_from_doc(doc):
    _check(doc, "model")
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise SchemaError(f"unknown model kind {kind!r}")
    if kind in ("canonical", "expansion") and \
            doc.get("strategy_encoding") != STRATEGY_ENCODING:
        raise SchemaError("unsupported strategy encoding "
                          f"{doc.get('strategy_encoding')!r}")
    try:
        if kind == "nlocal":
            return DiscreteNLocalModel(
                _scenario(doc), [np.array(q, dtype=float) for q in doc["source_dists"]],
                [_unarr(e) for e in doc["edge_responses"]], _unarr(doc["hub_response"]))
        if kind == "canonical":
            return CanonicalNLocalForm(
                _scenario(doc), [np.array(p, dtype=float) for p in doc["strategy_dists"]],
                _unarr(doc["hub_table"]))
        if kind == "expansion":
            return FullExpansion(
                _scenario(doc), [np.array(p, dtype=float) for p in doc["strategy_dists"]],
                _unarr(doc["hub_strategy_dists"]))
        return TriangleModel([np.array(q, dtype=float) for q in doc["source_dists"]],
                             _unarr(doc["response_A"]), _unarr(doc["response_B"]),
                             _unarr(doc["response_C"]))
    except KeyError as exc:
        raise SchemaError(f"{kind} model lacks field {exc}") from None


# realizations --------------------------------------------------------------------

def realization_to_doc(r: QuantumRealization) -> dict:
    d = _header("realization")
    states = [{"dims": list(st.dims), "matrix": _carr(st.matrix),
               "weights": st.weights.tolist(), "e_vectors": _carr(st.e_vectors),
               "f_vectors": _carr(st.f_vectors)} for st in r.states]
    d.update(scenario=r.scenario.to_dict(), states=states,
             povms={"edges": [_carr(e) for e in r.povms.edges],
                    "hub": _carr(r.povms.hub)},
             wiring=list(r.wiring),
             conventions={"state_order": "A_i,B_i (B fastest)",
                          "effects": "[input, outcome, operator]",
                          "operator": "1 trailing axis = diagonal, 2 = dense"})
    return d


def realization_from_doc(doc) -> QuantumRealization:
    _check(doc, "realization")
    try:
        states = [SeparableState(tuple(st["dims"]), _uncarr(st["matrix"]),
                                 np.array(st["weights"], dtype=float),
                                 _uncarr(st["e_vectors"]), _uncarr(st["f_vectors"]))
                  for st in doc["states"]]
        povms = POVMFamily(tuple(_uncarr(e) for e in doc["povms"]["edges"]),
                           _uncarr(doc["povms"]["hub"]))
        return QuantumRealization(_scenario(doc), tuple(states), povms,
                                  tuple(doc["wiring"]))
    except KeyError as exc:
        raise SchemaError(f"realization lacks field {exc}") from None


# reports -------------------------------------------------------------------------

def report_to_doc(r: CertReport) -> dict:
    d = _header("report")
    witness = r.witness
    if isinstance(witness, np.ndarray):
        witness = {"kind": "weights", "strategy_encoding": STRATEGY_ENCODING,
                   **_arr(witness)}
    elif witness is not None:
        witness = model_to_doc(witness)
    d.update(verdict=r.verdict.value, defect=float(r.defect),
             details=_details(r.details), witness=witness)
    return d


def _details(obj):
    if isinstance(obj, dict):
        return {str(k): _details(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_details(v) for v in obj]
    if isinstance(obj, CertReport):
        return report_to_doc(obj)
    return _plain(obj)


def report_from_doc(doc) -> CertReport:
    _check(doc, "report")
    try:
        verdict = Verdict(doc["verdict"])
    except (KeyError, ValueError):
        raise SchemaError(f"bad verdict {doc.get('verdict')!r}") from None
    w = doc.get("witness")
    if isinstance(w, dict) and w.get("kind") == "weights":
        witness = _unarr(w)
    elif isinstance(w, dict):
        witness = model_from_doc(w)
    else:
        witness = None
    return CertReport(verdict, float(doc["defect"]), witness, doc.get("details", {}))


# dispatch ------------------------------------------------------------------------

def to_doc(obj) -> dict:
    if isinstance(obj, CorrelationTensor):
        return tensor_to_doc(obj)
    if isinstance(obj, QuantumRealization):
        return realization_to_doc(obj)
    if isinstance(obj, CertReport):
        return report_to_doc(obj)
    return model_to_doc(obj)


_READERS = {"tensor": tensor_from_doc, "model": model_from_doc,
            "realization": realization_from_doc, "report": report_from_doc}


def from_doc(doc):
    if not isinstance(doc, dict) or doc.get("type") not in _READERS:
        raise SchemaError(f"unknown document type "
                          f"{doc.get('type') if isinstance(doc, dict) else None!r}")
    return _READERS[doc["type"]](doc)


def write(obj) -> str:
    return dumps(to_doc(obj))


def read(text: str):
    return from_doc(loads(text))


__all__ = ["MODEL_KINDS", "SchemaError", "VERSION", "dumps", "from_doc", "loads",
           "model_from_doc", "model_to_doc", "read", "realization_from_doc",
           "realization_to_doc", "report_from_doc", "report_to_doc",
           "tensor_from_doc", "tensor_to_doc", "to_doc", "write"]

"""
JSON shapes for every domain object.

Composite element ids (tuples from products and refinements) are written as
nested arrays and read back as nested tuples, so ids survive a round trip.
Rationals are "num/den" strings.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from pydantic import BaseModel

from persenc.algebra.exactlinalg import Matrix
from persenc.errors import ParseError, UnknownElement
from persenc.geometry.encoding import Encoding
from persenc.geometry.staircase import CellSet, Grid, cellset_from_expression, format_fraction, to_fraction
from persenc.modules.persistence import Morphism, PfdModule, interval_module
from persenc.modules.pipeline import PipelineResult
from persenc.order.poset import Element, FinitePoset, MonotoneMap, poset_from_relations


def element_to_json(x: Element) -> Any:
    if isinstance(x, tuple):
        return [element_to_json(v) for v in x]
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def element_from_json(v: Any) -> Element:
    if isinstance(v, list):
        return tuple(element_from_json(x) for x in v)
    if isinstance(v, dict):
        raise ParseError("Element ids must be scalars or arrays", {"value": v})
    return v


def matrix_to_json(m: Matrix) -> List[List[int]]:
    return m.tolist()


def matrix_from_json(data: Any, p: int, rows: int, cols: int) -> Matrix:
    try:
        arr = np.array(data if data != [] else np.zeros((rows, cols)), dtype=np.int64)
        return Matrix(arr, p, shape=(rows, cols))
    except (TypeError, ValueError) as e:
        raise ParseError(f"Matrix does not have shape {(rows, cols)}", {"matrix": data}) from e


def poset_to_json(P: FinitePoset) -> Dict[str, Any]:
    return {
        "elements": [element_to_json(x) for x in P.elements],
        "relations": [[element_to_json(x), element_to_json(y)] for x, y in P.covers],
    }


def poset_from_json(data: Mapping[str, Any]) -> FinitePoset:
    if "elements" not in data:
        raise ParseError("Poset needs an 'elements' list")
    elements = [element_from_json(x) for x in data["elements"]]
    pairs = []
    for rel in data.get("relations", []):
        if not isinstance(rel, list) or len(rel) != 2:
            raise ParseError("Relations are [lower, upper] pairs", {"relation": rel})
        pairs.append((element_from_json(rel[0]), element_from_json(rel[1])))
    return poset_from_relations(elements, pairs)


def map_from_json(data: Mapping[str, Any], source: FinitePoset, target: FinitePoset) -> MonotoneMap:
    assignment = {element_from_json(x): element_from_json(y) for x, y in data.get("assignment", [])}
    return MonotoneMap(source, target, assignment)


def grid_to_json(g: Grid) -> List[List[str]]:
    return g.to_json()


def grid_from_json(data: Any) -> Grid:
    if not isinstance(data, list) or not data:
        raise ParseError("Grid is a non-empty list of per-axis breakpoint lists", {"grid": data})
    return Grid(tuple(tuple(to_fraction(t) for t in axis) for axis in data))


def cellset_to_json(s: CellSet) -> Dict[str, Any]:
    return {"grid": grid_to_json(s.grid), "cells": [list(c) for c in s.cells()]}


def cellset_from_json(data: Any, grid: Optional[Grid] = None, dim: Optional[int] = None) -> CellSet:
    """Either an explicit {"grid", "cells"} object or a staircase expression."""
    if isinstance(data, dict) and "cells" in data and "op" not in data:
        g = grid_from_json(data["grid"]) if "grid" in data else grid
        if g is None:
            raise ParseError("Cell list needs a grid")
        return CellSet.from_cells(g, data["cells"])
    return cellset_from_expression(data, grid=grid, dim=dim)


def encoding_to_json(e: Encoding) -> Dict[str, Any]:
    labels = [[list(c), element_to_json(e.label(c))] for c in np.ndindex(*e.grid.shape)]
    return {"grid": grid_to_json(e.grid), "poset": poset_to_json(e.target), "labels": labels}


def encoding_from_json(data: Mapping[str, Any], target: FinitePoset) -> Encoding:
    grid = grid_from_json(data["grid"])
    labels = {}
    for entry in data.get("labels", []):
        if not isinstance(entry, list) or len(entry) != 2:
            raise ParseError("Labels are [cell, element] pairs", {"label": entry})
        labels[tuple(int(i) for i in entry[0])] = element_from_json(entry[1])
    default = data.get("default")
    if default is not None:
        d = element_from_json(default)
        for c in np.ndindex(*grid.shape):
            labels.setdefault(tuple(int(i) for i in c), d)
    return Encoding.from_labels(grid, target, labels)


def module_to_json(M: PfdModule, include_poset: bool = True) -> Dict[str, Any]:
    P = M.base
    out: Dict[str, Any] = {
        "field_char": M.p,
        "dims": [[element_to_json(x), d] for x, d in zip(P.elements, M.dims)],
        "covers": [
            [element_to_json(P.elements[i]), element_to_json(P.elements[j]), matrix_to_json(m)]
            for (i, j), m in sorted(M.covers.items())
        ],
    }
    if include_poset:
        out["poset"] = poset_to_json(P)
    return out


def _pairs(data: Any, what: str) -> List[List[Any]]:
    if isinstance(data, dict):
        return [[k, v] for k, v in data.items()]
    if isinstance(data, list):
        return data
    raise ParseError(f"{what} must be an object or a list of pairs", {what: data})


def module_from_json(data: Mapping[str, Any], P: FinitePoset, p: int) -> PfdModule:
    if "interval" in data:
        return interval_module(P, [element_from_json(x) for x in data["interval"]], p)
    dims: Dict[Element, int] = {}
    for x, d in _pairs(data.get("dims", []), "dims"):
        dims[P.elements[P.index(element_from_json(x))]] = int(d)
    maps = {}
    for entry in data.get("covers", []):
        if not isinstance(entry, list) or len(entry) != 3:
            raise ParseError("Cover maps are [lower, upper, matrix] triples", {"cover": entry})
        x, y = element_from_json(entry[0]), element_from_json(entry[1])
        maps[(x, y)] = matrix_from_json(entry[2], p, dims.get(y, 0), dims.get(x, 0))
    covers = set(P.covers)
    for x, y in maps:
        if (x, y) not in covers:
            raise UnknownElement(f"{x!r} -> {y!r} is not a cover of the poset", {"cover": [repr(x), repr(y)]})
    return PfdModule.from_elements(P, dims, maps, p)


def morphism_to_json(phi: Morphism) -> Dict[str, Any]:
    return {"components": [[element_to_json(x), matrix_to_json(c)] for x, c in zip(phi.base.elements, phi.components)]}


def pipeline_to_json(r: PipelineResult) -> Dict[str, Any]:
    return {
        "operation": r.operation,
        "encoding": encoding_to_json(r.refined),
        "module": module_to_json(r.module, include_poset=False),
        "phi": morphism_to_json(r.phi),
        "canonical": morphism_to_json(r.canonical),
        "certificate": r.report.model_dump(),
        "steps": r.steps,
    }


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False)

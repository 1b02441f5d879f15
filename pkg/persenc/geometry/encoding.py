"""
Encodings of R^n by finite posets, stored as labeled grids.

An Encoding labels every cell of a grid with an element of a finite target
poset. Because the cells of a grid form a product of chains whose order agrees
with the order of R^n, every question about the encoding map (monotonicity,
fibers, the induced map of posets) is answered on the finite cell poset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel

from persenc.errors import DimensionMismatch, NotAFactorization, NotMonotone, UnknownElement
from persenc.geometry.staircase import (
    Cell,
    CellSet,
    Grid,
    closed_class_status,
    is_interval,
    is_upset,
    merge_all,
    refinement,
    to_fraction,
)
from persenc.order.poset import (
    Element,
    FinitePoset,
    MonotoneMap,
    chain,
    component_refinement,
    product,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Encoding:
    grid: Grid
    target: FinitePoset
    # target index per cell, shape == grid.shape
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=np.int64)
        if labels.shape != self.grid.shape:
            raise DimensionMismatch(
                f"Label array has shape {labels.shape}, grid has {self.grid.shape}",
                {"labels": list(labels.shape), "grid": list(self.grid.shape)},
            )
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.target)):
            raise UnknownElement("Label index outside the target poset", {"max": int(labels.max())})
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labels(cls, grid: Grid, target: FinitePoset, labels: Mapping[Cell, Element]) -> "Encoding":
        arr = np.full(grid.shape, -1, dtype=np.int64)
        for cell, q in labels.items():
            arr[tuple(cell)] = target.index(q)
        if (arr < 0).any():
            missing = tuple(int(i) for i in np.argwhere(arr < 0)[0])
            raise UnknownElement(f"Cell {missing} has no label", {"cell": list(missing)})
        return cls(grid, target, arr)

    @classmethod
    def constant(cls, grid: Grid, target: Optional[FinitePoset] = None) -> "Encoding":
        return cls(grid, target or chain(1), np.zeros(grid.shape, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.grid.dim

    def label(self, cell: Cell) -> Element:
        return self.target.elements[int(self.labels[tuple(cell)])]

    def label_of_point(self, point: Sequence[Any]) -> Element:
        g = merge_all([self.grid, _grid_of_point(point)])
        cell = g.cell_of(point)
        return self.label(refinement(g, self.grid).cell(cell))

    def on(self, grid: Grid) -> "Encoding":
        """The same encoding map relabeled on a refinement of its grid."""
        if grid == self.grid:
            return self
        return Encoding(grid, self.target, refinement(grid, self.grid).pull(self.labels))

    def __repr__(self) -> str:
        return f"Encoding(dim={self.dim}, cells={self.grid.n_cells}, target={len(self.target)})"


def _grid_of_point(point: Sequence[Any]) -> Grid:
    return Grid(tuple((to_fraction(x),) for x in point))


@lru_cache(maxsize=64)
def cell_poset(grid: Grid) -> FinitePoset:
    """Product of one chain per axis; elements are atom-index tuples in C order."""
    return product(*(chain(k) for k in grid.shape))


def cell_map(e: Encoding) -> MonotoneMap:
    P = cell_poset(e.grid)
    flat = e.labels.reshape(-1)
    return MonotoneMap(P, e.target, {c: e.target.elements[int(flat[i])] for i, c in enumerate(P.elements)})


def check_monotone(e: Encoding) -> None:
    """Checks label(c) <= label(c') on every cover pair of the cell poset."""
    for axis in range(e.dim):
        if e.grid.shape[axis] < 2:
            continue
        lo = np.take(e.labels, np.arange(e.grid.shape[axis] - 1), axis=axis)
        hi = np.take(e.labels, np.arange(1, e.grid.shape[axis]), axis=axis)
        bad = ~e.target.leq[lo, hi]
        if bad.any():
            c = tuple(int(i) for i in np.argwhere(bad)[0])
            c2 = c[:axis] + (c[axis] + 1,) + c[axis + 1 :]
            raise NotMonotone(
                f"Cells {c} <= {c2} but labels {e.label(c)!r} is not <= {e.label(c2)!r}",
                {
                    "cells": [list(c), list(c2)],
                    "labels": [repr(e.label(c)), repr(e.label(c2))],
                    "regions": [e.grid.cell_label(c), e.grid.cell_label(c2)],
                },
            )


def validate_encoding(e: Encoding) -> Tuple[Encoding, List[Element]]:
    """
    Checks monotonicity and prunes target elements with empty fiber.
    Returns the pruned encoding and the list of pruned elements.
    """
    check_monotone(e)
    used = np.zeros(len(e.target), dtype=bool)
    used[np.unique(e.labels)] = True
    pruned = [e.target.elements[i] for i in np.nonzero(~used)[0]]
    if not pruned:
        return e, []
    keep = np.nonzero(used)[0]
    remap = np.full(len(e.target), -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    target = FinitePoset([e.target.elements[i] for i in keep], e.target.leq[np.ix_(keep, keep)])
    logger.debug("validate_encoding: pruned %d unreachable elements", len(pruned))
    return Encoding(e.grid, target, remap[e.labels]), pruned


def fiber(e: Encoding, q: Element) -> CellSet:
    qi = e.target.index(q)
    return CellSet(e.grid, e.labels == qi)


def all_fibers(e: Encoding) -> Dict[Element, CellSet]:
    return {q: CellSet(e.grid, e.labels == i) for i, q in enumerate(e.target.elements)}


def common_encoding_many(encodings: Sequence[Encoding]) -> Encoding:
    """
    Common refinement of finitely many encodings.

    The grid merges all input grids, a cell is labeled by the tuple of its input
    labels, and the target is the set of realized tuples with the product order.
    Projection to the k-th coordinate recovers the k-th input.
    """
    if not encodings:
        raise ValueError("common_encoding_many needs at least one encoding")
    dims = {e.dim for e in encodings}
    if len(dims) != 1:
        raise DimensionMismatch("Encodings have different dimensions", {"dims": sorted(dims)})
    grid = merge_all(e.grid for e in encodings)
    pulled = [e.on(grid).labels.reshape(-1) for e in encodings]
    codes = np.stack(pulled, axis=1)
    realized, inverse = np.unique(codes, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    leq = np.ones((len(realized), len(realized)), dtype=bool)
    for k, e in enumerate(encodings):
        col = realized[:, k]
        leq &= e.target.leq[np.ix_(col, col)]
    elements = [tuple(e.target.elements[int(i)] for e, i in zip(encodings, row)) for row in realized]
    logger.debug("common encoding of %d inputs: %d realized tuples on %d cells", len(encodings), len(elements), grid.n_cells)
    return Encoding(grid, FinitePoset(elements, leq), inverse.reshape(grid.shape))


def common_encoding(e1: Encoding, e2: Encoding) -> Encoding:
    return common_encoding_many([e1, e2])


def connective_refinement(e: Encoding) -> Encoding:
    """
    Splits every fiber into its <=-components.

    The new target has one element (q, k) per component, ordered by the
    transitive closure of cell comparabilities, so the induced map of cell
    posets satisfies both full-faithfulness conditions.
    """
    phat, ehat, _ = component_refinement(cell_map(e))
    labels = ehat.indices.reshape(e.grid.shape)
    logger.debug("connective refinement: %d -> %d target elements", len(e.target), len(phat))
    return Encoding(e.grid, phat, labels)


def factor_map(fine: Encoding, coarse: Encoding) -> MonotoneMap:
    """
    The monotone map g of targets with coarse = g . fine, if it exists.
    Every fine element needs a nonempty fiber, and each fiber must lie in a single coarse fiber.
    """
    if fine.dim != coarse.dim:
        raise DimensionMismatch("Encodings have different dimensions", {"dims": [fine.dim, coarse.dim]})
    grid = merge_all([fine.grid, coarse.grid])
    f = fine.on(grid).labels.reshape(-1)
    c = coarse.on(grid).labels.reshape(-1)
    pairs = np.unique(np.stack([f, c], axis=1), axis=0)
    assignment: Dict[Element, Element] = {}
    for fi, ci in pairs:
        q = fine.target.elements[int(fi)]
        if q in assignment:
            raise NotAFactorization(
                f"Fiber of {q!r} meets several coarse fibers",
                {"element": repr(q), "images": [repr(assignment[q]), repr(coarse.target.elements[int(ci)])]},
            )
        assignment[q] = coarse.target.elements[int(ci)]
    missing = [q for q in fine.target.elements if q not in assignment]
    if missing:
        raise NotAFactorization(f"Element {missing[0]!r} has an empty fiber", {"element": repr(missing[0])})
    g = MonotoneMap(fine.target, coarse.target, assignment)
    try:
        return g.validate()
    except NotMonotone as err:
        raise NotAFactorization("Induced map of targets is not monotone", err.certificate) from None


class FiberStatus(BaseModel):
    element: str
    cells: int
    interval: bool
    closed_class: Optional[bool] = None
    underline_fixed: bool
    tilde_fixed: bool
    witness: Optional[Dict[str, Any]] = None


class ClosedClassReport(BaseModel):
    fibers: List[FiberStatus]
    ok: bool
    # False when some fiber is not an interval: the fixed-point test is then only necessary
    complete: bool

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([f.model_dump(exclude={"witness"}) for f in self.fibers])


def fibers_in_closed_class(e: Encoding) -> ClosedClassReport:
    rows = []
    for q, s in all_fibers(e).items():
        status = closed_class_status(s)
        interval = is_interval(s)
        fixed = status["underline_fixed"] and status["tilde_fixed"]
        rows.append(
            FiberStatus(
                element=str(q),
                cells=len(s),
                interval=interval,
                closed_class=fixed if interval else None,
                underline_fixed=status["underline_fixed"],
                tilde_fixed=status["tilde_fixed"],
                witness=status.get("underline_witness") or status.get("tilde_witness"),
            )
        )
    ok = all(r.underline_fixed and r.tilde_fixed for r in rows)
    return ClosedClassReport(fibers=rows, ok=ok, complete=all(r.interval for r in rows))


def upset_encoding(u: CellSet) -> Encoding:
    """Two-element encoding 0 < 1 with fiber(1) = u; u must be an upset."""
    if not is_upset(u):
        raise NotMonotone("Set is not an upset", {"cells": len(u)})
    return Encoding(u.grid, chain(2), u.mask.astype(np.int64))


def interval_encoding(u: CellSet, v: CellSet) -> Encoding:
    """
    Encoding of I = u minus v for upsets u, v: x goes to (x in u, x in v) in {0<1}^2.
    F[I] is the interval module at (1, 0). Unrealized pairs are pruned.
    """
    e = common_encoding(upset_encoding(u), upset_encoding(v))
    return validate_encoding(e)[0]


def to_dot(e: Encoding, name: str = "encoding") -> str:
    """Hasse diagram of the target, each node annotated with its fiber size."""
    g = nx.DiGraph(name=name)
    node = {q: f"n{i}" for i, q in enumerate(e.target.elements)}
    for i, q in enumerate(e.target.elements):
        n_cells = int((e.labels == i).sum())
        g.add_node(node[q], label=f'"{q}\\n{n_cells} cells"')
    for x, y in e.target.covers:
        g.add_edge(node[x], node[y])
    return nx.nx_pydot.to_pydot(g).to_string()


def discrete_encoding(grid: Grid) -> Encoding:
    """Every cell its own target element; the finest encoding on a grid."""
    P = cell_poset(grid)
    return Encoding(grid, P, np.arange(len(P)).reshape(grid.shape))


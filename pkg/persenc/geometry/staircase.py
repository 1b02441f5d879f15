"""
Staircase-constructible subsets of R^n as unions of grid cells.

A Grid fixes finitely many rational breakpoints per axis. Each axis splits into
2k+1 atoms (-inf,t1), {t1}, (t1,t2), ..., {tk}, (tk,inf): point atoms sit at odd
indices, open atoms at even ones. A cell is one atom per axis, and a CellSet is
a boolean array over the cells. Cells ordered by atom index per axis form a
product of chains, and that order is exactly "some point of c is <= some point
of c'", so every order-theoretic question about a staircase set is answered on
the cell array.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from persenc.errors import DimensionMismatch, NotClosedClass, NotInterval, ParseError

logger = logging.getLogger(__name__)

Cell = Tuple[int, ...]
Coordinate = Optional[Fraction]  # None stands for -infinity


def to_fraction(x: Any) -> Fraction:
    if isinstance(x, Fraction):
        return x
    try:
        return Fraction(x)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ParseError(f"Not a rational number: {x!r}", {"value": repr(x)}) from e


def to_coordinate(x: Any) -> Coordinate:
    if x is None or (isinstance(x, str) and x.strip().lower() in {"-inf", "-infinity"}):
        return None
    if isinstance(x, float) and x == float("-inf"):
        return None
    return to_fraction(x)


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Grid:
    breakpoints: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        bps = tuple(tuple(to_fraction(t) for t in axis) for axis in self.breakpoints)
        if not bps:
            raise DimensionMismatch("A grid needs at least one axis")
        for i, axis in enumerate(bps):
            if any(a >= b for a, b in zip(axis, axis[1:])):
                raise ParseError(f"Breakpoints on axis {i} are not strictly increasing", {"axis": i})
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def trivial(cls, dim: int) -> "Grid":
        return cls(tuple(() for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.breakpoints)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(2 * len(axis) + 1 for axis in self.breakpoints)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def atom_of(self, axis: int, x: Coordinate) -> int:
        if x is None:
            return 0
        bp = self.breakpoints[axis]
        i = bisect.bisect_left(bp, x)
        if i < len(bp) and bp[i] == x:
            return 2 * i + 1
        return 2 * i

    def cell_of(self, point: Sequence[Any]) -> Cell:
        if len(point) != self.dim:
            raise DimensionMismatch(f"Point has {len(point)} coordinates, grid has {self.dim}")
        return tuple(self.atom_of(i, to_fraction(x)) for i, x in enumerate(point))

    def atom_label(self, axis: int, i: int) -> str:
        bp = self.breakpoints[axis]
        if i % 2 == 1:
            return "{" + format_fraction(bp[i // 2]) + "}"
        lo = "-inf" if i == 0 else format_fraction(bp[i // 2 - 1])
        hi = "inf" if i // 2 == len(bp) else format_fraction(bp[i // 2])
        return f"({lo},{hi})"

    def cell_label(self, cell: Cell) -> str:
        return "x".join(self.atom_label(a, i) for a, i in enumerate(cell))

    def representative(self, axis: int, i: int) -> Fraction:
        """A rational point inside atom i of the axis."""
        bp = self.breakpoints[axis]
        if not bp:
            return Fraction(0)
        if i % 2 == 1:
            return bp[i // 2]
        if i == 0:
            return bp[0] - 1
        if i // 2 == len(bp):
            return bp[-1] + 1
        return (bp[i // 2 - 1] + bp[i // 2]) / 2

    def cell_representative(self, cell: Cell) -> Tuple[Fraction, ...]:
        return tuple(self.representative(a, i) for a, i in enumerate(cell))

    def to_json(self) -> List[List[str]]:
        return [[format_fraction(t) for t in axis] for axis in self.breakpoints]


@dataclass(frozen=True)
class GridRefinement:
    """Per-axis maps from atoms of a fine grid to the atoms of a coarser grid containing them."""

    fine: Grid
    coarse: Grid
    axis_maps: Tuple[np.ndarray, ...]

    def cell(self, fine_cell: Cell) -> Cell:
        return tuple(int(m[i]) for m, i in zip(self.axis_maps, fine_cell))

    def pull(self, array: np.ndarray) -> np.ndarray:
        """Re-index a per-cell array of the coarse grid onto the fine grid."""
        return array[np.ix_(*self.axis_maps)]


def _axis_map(fine: Tuple[Fraction, ...], coarse: Tuple[Fraction, ...]) -> np.ndarray:
    out = np.zeros(2 * len(fine) + 1, dtype=np.int64)
    for i in range(len(out)):
        if i % 2 == 1:
            t = fine[i // 2]
            j = bisect.bisect_left(coarse, t)
            out[i] = 2 * j + 1 if j < len(coarse) and coarse[j] == t else 2 * j
        elif i > 0:
            out[i] = 2 * bisect.bisect_right(coarse, fine[i // 2 - 1])
    return out


def refinement(fine: Grid, coarse: Grid) -> GridRefinement:
    if fine.dim != coarse.dim:
        raise DimensionMismatch(f"Grids have dimensions {fine.dim} and {coarse.dim}")
    for a, (f, c) in enumerate(zip(fine.breakpoints, coarse.breakpoints)):
        if not set(c) <= set(f):
            raise ValueError(f"Grid on axis {a} is not a refinement")
    maps = tuple(_axis_map(f, c) for f, c in zip(fine.breakpoints, coarse.breakpoints))
    return GridRefinement(fine, coarse, maps)


def merge_grids(g1: Grid, g2: Grid) -> Tuple[Grid, GridRefinement, GridRefinement]:
    """Common refinement (union of breakpoints per axis) with the maps back to both inputs."""
    if g1.dim != g2.dim:
        raise DimensionMismatch(
            f"Cannot merge grids of dimensions {g1.dim} and {g2.dim}", {"dims": [g1.dim, g2.dim]}
        )
    merged = Grid(tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(g1.breakpoints, g2.breakpoints)))
    return merged, refinement(merged, g1), refinement(merged, g2)


def merge_all(grids: Iterable[Grid]) -> Grid:
    grids = list(grids)
    out = grids[0]
    for g in grids[1:]:
        out = merge_grids(out, g)[0]
    return out


class CellSet:
    """A union of cells of a grid. Immutable; set operations merge grids as needed."""

    __slots__ = ("grid", "mask")

    def __init__(self, grid: Grid, mask: np.ndarray):
        mask = np.array(mask, dtype=bool)
        if mask.shape != grid.shape:
            raise DimensionMismatch(f"Cell mask has shape {mask.shape}, grid has {grid.shape}")
        mask.setflags(write=False)
        self.grid = grid
        self.mask = mask

    @classmethod
    def empty(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def from_cells(cls, grid: Grid, cells: Iterable[Sequence[int]]) -> "CellSet":
        m = np.zeros(grid.shape, dtype=bool)
        for c in cells:
            c = tuple(int(i) for i in c)
            if len(c) != grid.dim or any(not 0 <= i < s for i, s in zip(c, grid.shape)):
                raise ParseError(f"Cell {c} does not fit grid of shape {grid.shape}", {"cell": list(c)})
            m[c] = True
        return cls(grid, m)

    def cells(self) -> List[Cell]:
        return [tuple(int(i) for i in c) for c in np.argwhere(self.mask)]

    def __len__(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def contains_point(self, point: Sequence[Any]) -> bool:
        g = merge_grids(self.grid, _grid_through([point], self.grid.dim))[0]
        return bool(self.on(g).mask[g.cell_of(point)])

    def on(self, grid: Grid) -> "CellSet":
        """The same point set expressed on a refinement of its grid."""
        if grid == self.grid:
            return self
        return CellSet(grid, refinement(grid, self.grid).pull(self.mask))

    def __or__(self, other: "CellSet") -> "CellSet":
        a, b = _align(self, other)
        return CellSet(a.grid, a.mask | b.mask)

    def __and__(self, other: "CellSet") -> "CellSet":
        a, b = _align(self, other)
        return CellSet(a.grid, a.mask & b.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        a, b = _align(self, other)
        return CellSet(a.grid, a.mask & ~b.mask)

    def __invert__(self) -> "CellSet":
        return CellSet(self.grid, ~self.mask)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CellSet):
            return NotImplemented
        if self.grid.dim != other.grid.dim:
            return False
        a, b = _align(self, other)
        return bool(np.array_equal(a.mask, b.mask))

    __hash__ = None  # type: ignore[assignment]

    def __le__(self, other: "CellSet") -> bool:
        a, b = _align(self, other)
        return not (a.mask & ~b.mask).any()

    def __repr__(self) -> str:
        return f"CellSet(dim={self.grid.dim}, cells={len(self)}/{self.grid.n_cells})"


def _align(s: CellSet, t: CellSet) -> Tuple[CellSet, CellSet]:
    if s.grid == t.grid:
        return s, t
    g, r1, r2 = merge_grids(s.grid, t.grid)
    return CellSet(g, r1.pull(s.mask)), CellSet(g, r2.pull(t.mask))


def _grid_through(points: Iterable[Sequence[Any]], dim: int) -> Grid:
    axes: List[set] = [set() for _ in range(dim)]
    for pt in points:
        if len(pt) != dim:
            raise DimensionMismatch(f"Point has {len(pt)} coordinates, expected {dim}")
        for a, x in enumerate(pt):
            c = to_coordinate(x)
            if c is not None:
                axes[a].add(c)
    return Grid(tuple(tuple(sorted(ax)) for ax in axes))


def union(*sets: CellSet) -> CellSet:
    out = sets[0]
    for s in sets[1:]:
        out = out | s
    return out


def intersect(*sets: CellSet) -> CellSet:
    out = sets[0]
    for s in sets[1:]:
        out = out & s
    return out


def complement(s: CellSet) -> CellSet:
    return ~s


def principal_upset(p: Sequence[Any], grid: Optional[Grid] = None) -> CellSet:
    """[p, inf) for p in (Q u {-inf})^n; the grid is refined to contain the finite coordinates."""
    g = _grid_through([p], len(p))
    if grid is not None:
        g = merge_grids(grid, g)[0]
    m = np.zeros(g.shape, dtype=bool)
    lo = tuple(slice(g.atom_of(a, to_coordinate(x)), None) for a, x in enumerate(p))
    m[lo] = True
    return CellSet(g, m)


def from_points(points: Sequence[Sequence[Any]], grid: Optional[Grid] = None) -> CellSet:
    """The finite set of the given rational points."""
    if not points:
        if grid is None:
            raise ParseError("from_points needs a grid when no points are given")
        return CellSet.empty(grid)
    g = _grid_through(points, len(points[0]))
    if grid is not None:
        g = merge_grids(grid, g)[0]
    return CellSet.from_cells(g, [g.cell_of(pt) for pt in points])


def up_closure(s: CellSet) -> CellSet:
    m = s.mask
    for axis in range(m.ndim):
        m = np.logical_or.accumulate(m, axis=axis)
    return CellSet(s.grid, m)


def down_closure(s: CellSet) -> CellSet:
    m = s.mask
    for axis in range(m.ndim):
        m = np.flip(np.logical_or.accumulate(np.flip(m, axis=axis), axis=axis), axis=axis)
    return CellSet(s.grid, m)


def is_upset(s: CellSet) -> bool:
    return bool(np.array_equal(up_closure(s).mask, s.mask))


def is_downset(s: CellSet) -> bool:
    return bool(np.array_equal(down_closure(s).mask, s.mask))


def is_interval(s: CellSet) -> bool:
    return bool(np.array_equal(up_closure(s).mask & down_closure(s).mask, s.mask))


def underline(s: CellSet) -> CellSet:
    """
    Limit points of sequences in s approaching from above.

    Per axis an open atom (a,b) with finite a gains the point atom {a}; point
    atoms and the lowest atom are fixed. The operator commutes with unions and
    acts on a cell as the product of the per-axis rules, so it is applied one
    axis at a time.
    """
    m = s.mask.copy()
    for axis in range(m.ndim):
        if m.shape[axis] == 1:
            continue
        points = [slice(None)] * m.ndim
        opens = [slice(None)] * m.ndim
        points[axis] = slice(1, None, 2)
        opens[axis] = slice(2, None, 2)
        m[tuple(points)] |= m[tuple(opens)]
    return CellSet(s.grid, m)


def tilde(s: CellSet) -> CellSet:
    return ~underline(~s)


def topological_closure(s: CellSet) -> CellSet:
    """Closure in R^n: each open atom gains both neighbouring point atoms."""
    m = s.mask.copy()
    for axis in range(m.ndim):
        if m.shape[axis] == 1:
            continue
        points = [slice(None)] * m.ndim
        below = [slice(None)] * m.ndim
        above = [slice(None)] * m.ndim
        points[axis] = slice(1, None, 2)
        below[axis] = slice(0, -1, 2)
        above[axis] = slice(2, None, 2)
        m[tuple(points)] |= m[tuple(below)] | m[tuple(above)]
    return CellSet(s.grid, m)


def interior(s: CellSet) -> CellSet:
    return ~topological_closure(~s)


def _components(s: CellSet, adjacency) -> List[CellSet]:
    x = np.argwhere(s.mask)
    if len(x) == 0:
        return []
    adj = adjacency(x)
    g = nx.from_numpy_array((adj | adj.T).astype(np.int8))
    out = []
    for comp in sorted(nx.connected_components(g), key=min):
        m = np.zeros(s.grid.shape, dtype=bool)
        m[tuple(x[sorted(comp)].T)] = True
        out.append(CellSet(s.grid, m))
    return out


def _comparable(x: np.ndarray) -> np.ndarray:
    return np.all(x[:, None, :] <= x[None, :, :], axis=2)


def _touching(x: np.ndarray) -> np.ndarray:
    # c' meets the closure of c on every axis
    d = x[None, :, :] - x[:, None, :]
    open_atom = (x[:, None, :] % 2) == 0
    return np.all((d == 0) | ((np.abs(d) == 1) & open_atom), axis=2)


def leq_components_cells(s: CellSet) -> List[CellSet]:
    """<=-connected components: components of the comparability graph on member cells."""
    return _components(s, _comparable)


def topological_components(s: CellSet) -> List[CellSet]:
    """Connected components in R^n: cells are convex, so two cells touch iff one meets the other's closure."""
    return _components(s, _touching)


def closed_class_status(s: CellSet) -> Dict[str, Any]:
    """Fixed-point status of underline and tilde, with a witness cell for each failure."""
    out: Dict[str, Any] = {}
    for name, op in (("underline", underline), ("tilde", tilde)):
        diff = op(s).mask ^ s.mask
        out[f"{name}_fixed"] = not diff.any()
        if diff.any():
            cell = tuple(int(i) for i in np.argwhere(diff)[0])
            out[f"{name}_witness"] = {"cell": list(cell), "label": s.grid.cell_label(cell)}
    return out


def is_closed_class_interval(s: CellSet) -> bool:
    if not is_interval(s):
        raise NotInterval("Set is not an interval", {"cells": len(s)})
    return underline(s) == s and tilde(s) == s


def closed_interval_decompose(s: CellSet) -> Tuple[CellSet, CellSet]:
    """
    Write a closed-class interval as U minus V with U, V topologically closed upsets.
    U is the closure of the up-closure; V the closure of the complement of the down-closure.
    """
    if not is_interval(s):
        raise NotInterval("Set is not an interval", {"cells": len(s)})
    status = closed_class_status(s)
    if not (status["underline_fixed"] and status["tilde_fixed"]):
        raise NotClosedClass("Interval is not fixed by underline and tilde", status)
    u = underline(up_closure(s))
    v = underline(~down_closure(s))
    if u & ~v != s:
        raise NotClosedClass("Decomposition does not reconstruct the interval", status)
    return u, v


def cellset_from_expression(expr: Any, grid: Optional[Grid] = None, dim: Optional[int] = None) -> CellSet:
    """
    Build a set from a JSON staircase expression:
      {"op": "upset", "point": [..]}            principal upset [p, inf)
      {"op": "union" | "intersect", "args": [..]}
      {"op": "complement", "args": [e]}
      {"op": "difference", "args": [a, b]}
      {"op": "points", "points": [[..], ..]}
      {"op": "cells", "cells": [[..], ..]}      atom indices on the given grid
      {"op": "all"} / {"op": "empty"}
    """
    if not isinstance(expr, dict) or "op" not in expr:
        raise ParseError("Staircase expression must be an object with an 'op' key", {"expr": repr(expr)})
    op = expr["op"]
    base = grid if grid is not None else (Grid.trivial(dim) if dim else None)

    def sub(e: Any) -> CellSet:
        return cellset_from_expression(e, grid=grid, dim=dim)

    if op == "upset":
        return principal_upset(expr["point"], grid)
    if op == "points":
        return from_points(expr["points"], grid)
    if op in {"cells", "all", "empty"}:
        if base is None:
            raise ParseError(f"'{op}' needs a grid or a dimension")
        if op == "all":
            return CellSet.full(base)
        if op == "empty":
            return CellSet.empty(base)
        return CellSet.from_cells(base, expr["cells"])
    args = expr.get("args")
    if not isinstance(args, list) or not args:
        raise ParseError(f"'{op}' needs a non-empty 'args' list")
    if op == "union":
        return union(*(sub(a) for a in args))
    if op == "intersect":
        return intersect(*(sub(a) for a in args))
    if op == "complement":
        return ~sub(args[0])
    if op == "difference":
        return sub(args[0]) - sub(args[1])
    raise ParseError(f"Unknown staircase operation {op!r}", {"op": op})


def render_ascii(s: CellSet) -> str:
    """2-d picture, axis 0 left to right, axis 1 bottom to top; '#' marks member cells."""
    if s.grid.dim != 2:
        raise DimensionMismatch("ASCII rendering needs a 2-d set")
    rows = []
    for j in reversed(range(s.grid.shape[1])):
        rows.append("".join("#" if s.mask[i, j] else "." for i in range(s.grid.shape[0])))
    return "\n".join(rows)

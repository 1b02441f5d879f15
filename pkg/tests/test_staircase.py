from fractions import Fraction

import numpy as np
import pytest

from persenc.errors import DimensionMismatch, NotClosedClass, NotInterval, ParseError
from persenc.geometry.staircase import (
    CellSet,
    Grid,
    cellset_from_expression,
    closed_class_status,
    closed_interval_decompose,
    down_closure,
    from_points,
    interior,
    is_closed_class_interval,
    is_downset,
    is_interval,
    is_upset,
    leq_components_cells,
    merge_grids,
    principal_upset,
    render_ascii,
    tilde,
    topological_closure,
    topological_components,
    underline,
    up_closure,
)


def up(*p):
    return principal_upset(p)


def pts(*points):
    return from_points(list(points))


def test_grid_atoms_and_labels():
    g = Grid(((0,),))
    assert g.shape == (3,)
    assert [g.atom_label(0, i) for i in range(3)] == ["(-inf,0)", "{0}", "(0,inf)"]
    assert g.cell_of([Fraction(-1, 2)]) == (0,)
    assert g.cell_of(["0"]) == (1,)
    assert g.cell_of([5]) == (2,)
    assert g.cell_representative((2,)) == (Fraction(1),)


def test_grid_rejects_unsorted_breakpoints():
    with pytest.raises(ParseError):
        Grid(((1, 0),))
    with pytest.raises(ParseError):
        Grid((("x",),))


def test_merge_grids():
    g = Grid(((0, 1), (2,)))
    merged, r1, r2 = merge_grids(g, g)
    assert merged == g
    assert all(np.array_equal(m, np.arange(s)) for m, s in zip(r1.axis_maps, g.shape))

    merged, r1, r2 = merge_grids(Grid(((1,),)), Grid(((2,),)))
    assert merged.breakpoints == ((Fraction(1), Fraction(2)),)
    # fine atom (1,2) lies in (1,inf) of the first grid and (-inf,2) of the second
    assert r1.cell((2,)) == (2,)
    assert r2.cell((2,)) == (0,)

    merged, _, _ = merge_grids(Grid.trivial(1), Grid(((0,),)))
    assert merged == Grid(((0,),))

    with pytest.raises(DimensionMismatch):
        merge_grids(Grid.trivial(1), Grid.trivial(2))


def test_boolean_operations():
    s = up(0, 0) | pts((3, -1))
    assert (s | ~s) == CellSet.full(Grid.trivial(2))
    assert (s & ~s).is_empty()
    half = up(0) & ~down_closure(pts((0,)))
    assert half == up(0) - pts((0,))
    assert half.on(Grid(((0,),))).cells() == [(2,)]


def test_principal_upsets():
    assert principal_upset(["-inf"]) == CellSet.full(Grid.trivial(1))
    q = up(0, 0)
    assert q.grid == Grid(((0,), (0,)))
    assert q.cells() == [(1, 1), (1, 2), (2, 1), (2, 2)]
    half = up(0, "-inf")
    assert half.cells() == [(1, 0), (2, 0)]
    assert half.contains_point((0, -100))
    assert not half.contains_point((Fraction(-1, 3), 7))


def test_up_and_down_closures():
    assert up_closure(up(1, 2)) == up(1, 2)
    assert up_closure(pts((0,))) == up(0)
    assert down_closure(pts((0,))).cells() == [(0,), (1,)]
    stairs = up_closure(pts((0, 1), (1, 0)))
    assert stairs == up(0, 1) | up(1, 0)


def test_upset_downset_interval_predicates():
    assert is_upset(up(2, 3))
    empty = CellSet.empty(Grid.trivial(2))
    assert is_upset(empty) and is_downset(empty) and is_interval(empty)
    gap = pts((0,)) | (up(1) - pts((1,)))
    assert not is_interval(gap)


def test_underline():
    assert underline(up(0) - pts((0,))) == up(0)
    assert underline(up(1, 1)) == up(1, 1)
    open_quadrant = CellSet.from_cells(Grid(((0,), (0,))), [(2, 2)])
    assert underline(open_quadrant) == up(0, 0)


def test_tilde():
    assert tilde(down_closure(pts((0,)))).on(Grid(((0,),))).cells() == [(0,)]
    half_open = up(0) - up(1)
    assert tilde(half_open) == half_open
    full = CellSet.full(Grid(((0, 1),)))
    assert tilde(full) == full


def test_closure_and_interior():
    open_interval = up(0) - up(1) - pts((0,))
    closed = topological_closure(open_interval)
    assert closed == up(0) - (up(1) - pts((1,)))
    assert interior(closed) == open_interval


def test_leq_components():
    diag = pts((0, 2), (1, 1), (2, 0))
    assert len(leq_components_cells(diag)) == 3
    assert len(leq_components_cells(up(0, 0) | up(5, -3))) == 1
    assert leq_components_cells(CellSet.empty(Grid.trivial(1))) == []


def test_topological_components():
    punctured = ~pts((0,))
    assert len(topological_components(punctured)) == 2
    glued = (up(0) - up(1)) | (up(1) & down_closure(pts((2,))))
    assert len(topological_components(glued)) == 1
    assert len(topological_components(pts((0, 2), (1, 1), (2, 0)))) == 3


def test_closed_interval_decompose():
    q = up(0, 0)
    u, v = closed_interval_decompose(q)
    assert u == q
    assert v.is_empty()

    square = up(1, 1) - up(2, "-inf") - up("-inf", 2)
    u, v = closed_interval_decompose(square)
    assert u == up(1, 1)
    assert v == up(2, "-inf") | up("-inf", 2)
    assert u - v == square


def test_closed_square_is_not_in_the_closed_class():
    closed_square = up(1, 1) & down_closure(pts((2, 2)))
    assert not is_closed_class_interval(closed_square)
    status = closed_class_status(closed_square)
    assert status["underline_fixed"]
    assert not status["tilde_fixed"]
    with pytest.raises(NotClosedClass):
        closed_interval_decompose(closed_square)


def test_is_closed_class_interval():
    assert is_closed_class_interval(up(3, -1))
    assert is_closed_class_interval(up(1, 1) - up(2, "-inf") - up("-inf", 2))
    with pytest.raises(NotInterval):
        is_closed_class_interval(pts((0, 0), (2, 2)))


def test_cellset_from_expression():
    expr = {
        "op": "difference",
        "args": [{"op": "upset", "point": [0, 0]}, {"op": "upset", "point": ["1", "1"]}],
    }
    lshape = cellset_from_expression(expr)
    assert lshape == up(0, 0) - up(1, 1)
    assert cellset_from_expression({"op": "all"}, dim=2) == CellSet.full(Grid.trivial(2))
    with pytest.raises(ParseError):
        cellset_from_expression({"op": "bogus", "args": [expr]})
    with pytest.raises(ParseError):
        cellset_from_expression({"op": "cells", "cells": [[0]]})


def test_render_ascii():
    assert render_ascii(up(0, 0)) == ".##\n.##\n..."
    with pytest.raises(DimensionMismatch):
        render_ascii(up(0))

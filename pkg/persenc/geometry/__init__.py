"""Staircase sets on grids and encodings of R^n by finite posets."""

from persenc.geometry.encoding import (
    ClosedClassReport,
    Encoding,
    all_fibers,
    cell_map,
    cell_poset,
    common_encoding,
    common_encoding_many,
    connective_refinement,
    factor_map,
    fiber,
    fibers_in_closed_class,
    interval_encoding,
    upset_encoding,
    validate_encoding,
)
from persenc.geometry.staircase import (
    CellSet,
    Grid,
    cellset_from_expression,
    closed_interval_decompose,
    complement,
    down_closure,
    from_points,
    intersect,
    is_closed_class_interval,
    leq_components_cells,
    merge_grids,
    principal_upset,
    tilde,
    topological_components,
    underline,
    union,
    up_closure,
)

__all__ = [
    "CellSet",
    "ClosedClassReport",
    "Encoding",
    "Grid",
    "all_fibers",
    "cell_map",
    "cell_poset",
    "cellset_from_expression",
    "closed_interval_decompose",
    "common_encoding",
    "common_encoding_many",
    "complement",
    "connective_refinement",
    "down_closure",
    "factor_map",
    "fiber",
    "fibers_in_closed_class",
    "from_points",
    "intersect",
    "interval_encoding",
    "is_closed_class_interval",
    "leq_components_cells",
    "merge_grids",
    "principal_upset",
    "tilde",
    "topological_components",
    "underline",
    "union",
    "up_closure",
    "upset_encoding",
    "validate_encoding",
]

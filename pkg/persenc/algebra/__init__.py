"""Exact linear algebra over prime fields."""

from persenc.algebra.exactlinalg import (
    Matrix,
    block_diagonal,
    cokernel_projection,
    column_span_basis,
    hstack,
    kernel_basis,
    rank,
    rref,
    solve_in_span,
    vstack,
)

__all__ = [
    "Matrix",
    "block_diagonal",
    "cokernel_projection",
    "column_span_basis",
    "hstack",
    "kernel_basis",
    "rank",
    "rref",
    "solve_in_span",
    "vstack",
]

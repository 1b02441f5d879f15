"""
Brute-force pointwise checks of encoded modules.

An encoded module is evaluated at finitely many rational sample points. The
pipeline output is compared with the operation recomputed sample by sample
from the inputs, using only dimensions and ranks of transition maps, which do
not depend on the chosen bases.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from persenc.algebra.exactlinalg import (
    Matrix,
    cokernel_projection,
    column_span_basis,
    kernel_basis,
    rank,
)
from persenc.errors import DimensionMismatch, Mismatch, ParseError
from persenc.geometry.staircase import format_fraction, to_fraction
from persenc.modules.persistence import PfdModule, structure_map
from persenc.modules.pipeline import EncodedModule, PhiSpec, PipelineResult, abelian_pipeline
from persenc.order.poset import FinitePoset

logger = logging.getLogger(__name__)

Point = Tuple[Fraction, ...]


@dataclass(frozen=True)
class SamplePlan:
    points: Tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = tuple(tuple(to_fraction(x) for x in pt) for pt in self.points)
        if not pts:
            raise ParseError("A sample plan needs at least one point")
        if len({len(pt) for pt in pts}) != 1:
            raise DimensionMismatch("Sample points have different dimensions")
        if len(set(pts)) != len(pts):
            raise ParseError("Sample points must be pairwise distinct", {"duplicates": len(pts) - len(set(pts))})
        object.__setattr__(self, "points", pts)

    @classmethod
    def grid(cls, *axes: Sequence[Any]) -> "SamplePlan":
        """All points of a product of per-axis values; closed under suprema."""
        values = [sorted({to_fraction(v) for v in axis}) for axis in axes]
        return cls(tuple(itertools.product(*values)))

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def close_under_suprema(self) -> "SamplePlan":
        pts = set(self.points)
        frontier = set(pts)
        while frontier:
            new = set()
            for a in frontier:
                for b in pts:
                    s = tuple(max(x, y) for x, y in zip(a, b))
                    if s not in pts:
                        new.add(s)
            pts |= new
            frontier = new
        return SamplePlan(tuple(sorted(pts)))

    def union(self, other: "SamplePlan") -> "SamplePlan":
        return SamplePlan(tuple(sorted(set(self.points) | set(other.points))))


def _label_index(E: EncodedModule, x: Sequence[Any]) -> int:
    return E.module.base.index(E.encoding.label_of_point(x))


def evaluate(E: EncodedModule, x: Sequence[Any]) -> int:
    """Dimension of the encoded module at a rational point."""
    return E.module.dims[_label_index(E, x)]


def transition(E: EncodedModule, x: Sequence[Any], y: Sequence[Any]) -> Matrix:
    """The structure map from x to y, for x <= y coordinatewise."""
    xs, ys = [to_fraction(v) for v in x], [to_fraction(v) for v in y]
    if any(a > b for a, b in zip(xs, ys)):
        raise ValueError(f"{x} is not <= {y}")
    P = E.module.base
    return structure_map(E.module, P.elements[_label_index(E, xs)], P.elements[_label_index(E, ys)])


def sample_poset(plan: SamplePlan) -> FinitePoset:
    n = len(plan.points)
    leq = np.array(
        [[all(a <= b for a, b in zip(plan.points[i], plan.points[j])) for j in range(n)] for i in range(n)],
        dtype=bool,
    ).reshape(n, n)
    return FinitePoset(plan.points, leq)


def restrict_to_samples(E: EncodedModule, plan: SamplePlan) -> PfdModule:
    """The encoded module evaluated on the sample points with the product order."""
    S = sample_poset(plan)
    labels = [E.module.base.elements[_label_index(E, x)] for x in plan.points]
    dims = tuple(E.module.dim(q) for q in labels)
    maps = {}
    for x, y in S.covers:
        i, j = S.index(x), S.index(y)
        maps[(i, j)] = structure_map(E.module, labels[i], labels[j])
    return PfdModule(S, dims, maps, E.p)


def point_label(x: Sequence[Fraction]) -> str:
    return "(" + ", ".join(format_fraction(v) for v in x) + ")"


class Discrepancy(BaseModel):
    """Dimensions or ranks for kind "dim" and "rank", [rows, cols] shapes for kind "phi_shape"."""

    kind: str
    points: List[str]
    expected: Union[int, List[int]]
    actual: Union[int, List[int]]


class CrosscheckReport(BaseModel):
    operation: str
    points: int
    pairs: int
    mismatches: List[Discrepancy]
    ok: bool

    def raise_for_status(self) -> "CrosscheckReport":
        if not self.ok:
            first = self.mismatches[0]
            raise Mismatch(
                f"{self.operation}: {first.kind} differs at {', '.join(first.points)}",
                first.model_dump(),
            )
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([m.model_dump() for m in self.mismatches], columns=["kind", "points", "expected", "actual"])


def _expected_dim(op: str, m: int, n: int, r: int) -> int:
    return {"kernel": m - r, "image": r, "cokernel": n - r}[op]


def _expected_rank(op: str, phi_x: Matrix, m_xy: Matrix, n_xy: Matrix, phi_y: Matrix) -> int:
    if op == "kernel":
        return rank(m_xy @ kernel_basis(phi_x))
    if op == "image":
        return rank(n_xy @ column_span_basis(phi_x))
    return rank(cokernel_projection(phi_y) @ n_xy)


def crosscheck_result(
    result: PipelineResult,
    a: EncodedModule,
    b: EncodedModule,
    plan: SamplePlan,
    stop_at_first: bool = False,
) -> CrosscheckReport:
    """
    Compares a pipeline result with the operation recomputed at the samples from
    the inputs A and B, each evaluated on its own encoding.
    """
    op = result.operation
    pts = plan.points
    A = restrict_to_samples(a, plan)
    B = restrict_to_samples(b, plan)
    R = restrict_to_samples(result.result, plan)
    S = A.base
    phi = [result.phi.at(result.refined.label_of_point(x)) for x in pts]
    mismatches: List[Discrepancy] = []

    for i, x in enumerate(pts):
        if phi[i].shape != (B.dims[i], A.dims[i]):
            mismatches.append(
                Discrepancy(kind="phi_shape", points=[point_label(x)], expected=[B.dims[i], A.dims[i]], actual=list(phi[i].shape))
            )
            if stop_at_first:
                break
            continue
        want = _expected_dim(op, A.dims[i], B.dims[i], rank(phi[i]))
        if want != R.dims[i]:
            mismatches.append(Discrepancy(kind="dim", points=[point_label(x)], expected=want, actual=R.dims[i]))
            if stop_at_first:
                break

    pairs = 0
    if not mismatches:
        for i, j in zip(*np.nonzero(S.leq & ~np.eye(len(S), dtype=bool))):
            x, y = S.elements[i], S.elements[j]
            pairs += 1
            m_xy = structure_map(A, x, y)
            n_xy = structure_map(B, x, y)
            want = _expected_rank(op, phi[i], m_xy, n_xy, phi[j])
            got = rank(structure_map(R, x, y))
            if want != got:
                mismatches.append(
                    Discrepancy(kind="rank", points=[point_label(x), point_label(y)], expected=want, actual=got)
                )
                if stop_at_first:
                    break
    logger.debug("crosscheck %s: %d points, %d pairs, %d mismatches", op, len(pts), pairs, len(mismatches))
    return CrosscheckReport(operation=op, points=len(pts), pairs=pairs, mismatches=mismatches, ok=not mismatches)


def crosscheck_operation(
    op: str,
    a: EncodedModule,
    b: EncodedModule,
    spec: PhiSpec,
    plan: SamplePlan,
) -> CrosscheckReport:
    result = abelian_pipeline(a, b, spec, op)
    return crosscheck_result(result, a, b, plan)


def sample_table(E: EncodedModule, plan: SamplePlan) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for x in plan.points:
        rows.append({"point": point_label(x), "label": str(E.encoding.label_of_point(x)), "dim": evaluate(E, x)})
    return pd.DataFrame(rows)


def plan_from_json(data: Any, dim: Optional[int] = None) -> SamplePlan:
    """{"points": [[..], ..]} or {"grid": [[axis values], ..]}, optionally "close": true."""
    if not isinstance(data, dict) or not ("grid" in data or "points" in data):
        raise ParseError("A sample plan needs \"points\" or \"grid\"", {"keys": sorted(data) if isinstance(data, dict) else []})
    if "grid" in data:
        plan = SamplePlan.grid(*data["grid"])
    else:
        plan = SamplePlan(tuple(tuple(p) for p in data["points"]))
    if dim is not None and plan.dim != dim:
        raise DimensionMismatch(f"Sample plan has dimension {plan.dim}, modules have {dim}")
    if data.get("close"):
        plan = plan.close_under_suprema()
    return plan

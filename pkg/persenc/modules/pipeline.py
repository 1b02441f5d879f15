"""
Encoded modules and the kernel / image / cokernel pipeline.

Two encoded modules are brought onto a common encoding, that encoding is
refined until every fiber is <=-connected, both modules are pulled back to the
refined target, and the requested operation runs on the finite poset. The
refined encoding map induces a fully faithful pullback, so every morphism of
the encoded modules is presented over the refined target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from persenc.algebra.exactlinalg import Matrix
from persenc.errors import DimensionMismatch, FieldMismatch, ParseError
from persenc.geometry.encoding import (
    ClosedClassReport,
    Encoding,
    common_encoding,
    common_encoding_many,
    connective_refinement,
    factor_map,
    fibers_in_closed_class,
    interval_encoding,
    validate_encoding,
)
from persenc.geometry.staircase import CellSet
from persenc.modules.persistence import (
    OPERATIONS,
    Morphism,
    PfdModule,
    direct_sum,
    hom_space,
    identity_morphism,
    interval_module,
    linear_combination,
    pullback,
    same_base,
    validate_module,
    validate_morphism,
    zero_morphism,
)
from persenc.order.poset import Element

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EncodedModule:
    encoding: Encoding
    module: PfdModule

    def __post_init__(self) -> None:
        if not same_base(self.module.base, self.encoding.target):
            raise DimensionMismatch("Module base is not the target poset of the encoding")

    @property
    def p(self) -> int:
        return self.module.p

    def validate(self) -> "EncodedModule":
        validate_encoding(self.encoding)
        validate_module(self.module)
        return self


def encode_interval_module(u: CellSet, v: CellSet, p: int) -> EncodedModule:
    """F[I] for I = u minus v with u, v upsets, over the two-bit encoding x -> (x in u, x in v)."""
    e = interval_encoding(u, v)
    support = [q for q in e.target.elements if q == (1, 0)]
    return EncodedModule(e, interval_module(e.target, support, p))


def reencode(m: EncodedModule, fine: Encoding) -> EncodedModule:
    """Pull m back along the factorization of its encoding through `fine`."""
    g = factor_map(fine, m.encoding)
    return EncodedModule(fine, pullback(g, m.module))


def encoded_direct_sum(*modules: EncodedModule) -> EncodedModule:
    common = validate_encoding(common_encoding_many([m.encoding for m in modules]))[0]
    return EncodedModule(common, direct_sum(*(reencode(m, common).module for m in modules)))


@dataclass(frozen=True)
class PhiSpec:
    """
    How a morphism A -> B is given over the refined target.

    kind="components": matrices keyed by refined element.
    kind="pointwise": a function of a representative point, evaluated once per fiber.
    kind="hom": coefficients over the canonical hom-space basis.
    kind="identity": identity, when A and B pull back to the same dimensions.
    """

    kind: str
    components: Optional[Mapping[Element, Any]] = None
    coefficients: Optional[Sequence[int]] = None
    pointwise: Optional[Callable[[Sequence[Any]], Any]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in {"components", "pointwise", "hom", "identity"}:
            raise ParseError(f"Unknown morphism presentation {self.kind!r}")

    @classmethod
    def identity(cls) -> "PhiSpec":
        return cls("identity")

    @classmethod
    def from_hom(cls, coefficients: Sequence[int]) -> "PhiSpec":
        return cls("hom", coefficients=tuple(int(c) for c in coefficients))

    @classmethod
    def from_components(cls, components: Mapping[Element, Any]) -> "PhiSpec":
        return cls("components", components=dict(components))

    @classmethod
    def from_pointwise(cls, fn: Callable[[Sequence[Any]], Any]) -> "PhiSpec":
        return cls("pointwise", pointwise=fn)


def assemble_phi(spec: PhiSpec, source: PfdModule, target: PfdModule, refined: Encoding) -> Morphism:
    p = source.p
    P = source.base
    if spec.kind == "identity":
        if source.dims != target.dims:
            raise DimensionMismatch("Identity needs equal dimensions", {"source": list(source.dims), "target": list(target.dims)})
        phi = identity_morphism(source)
        phi = Morphism(source, target, phi.components)
    elif spec.kind == "hom":
        _, basis = hom_space(source, target)
        coeffs = list(spec.coefficients or [])
        if len(coeffs) != len(basis):
            raise DimensionMismatch(
                f"Hom space has dimension {len(basis)}, got {len(coeffs)} coefficients",
                {"hom_dim": len(basis), "coefficients": len(coeffs)},
            )
        if not basis:
            return zero_morphism(source, target)
        phi = linear_combination(coeffs, basis)
    elif spec.kind == "components":
        comps = {q: Matrix(m, p, shape=(target.dim(q), source.dim(q))) for q, m in (spec.components or {}).items()}
        phi = Morphism.from_elements(source, target, comps)
    else:
        comps = {}
        for i, q in enumerate(P.elements):
            cell = tuple(int(c) for c in np.argwhere(refined.labels == i)[0])
            point = refined.grid.cell_representative(cell)
            value = spec.pointwise(point)
            comps[q] = Matrix(value, p, shape=(target.dims[i], source.dims[i]))
        phi = Morphism.from_elements(source, target, comps)
    return validate_morphism(phi)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    operation: str
    refined: Encoding
    source: PfdModule
    target: PfdModule
    phi: Morphism
    result: EncodedModule
    canonical: Morphism
    report: ClosedClassReport
    steps: List[Dict[str, Any]]

    @property
    def module(self) -> PfdModule:
        return self.result.module


def prepare(a: EncodedModule, b: EncodedModule) -> tuple[Encoding, PfdModule, PfdModule, List[Dict[str, Any]]]:
    """Common encoding, connective refinement and pullback of both modules."""
    if a.p != b.p:
        raise FieldMismatch("Encoded modules use different fields", {"left": a.p, "right": b.p})
    steps: List[Dict[str, Any]] = []
    common = validate_encoding(common_encoding(a.encoding, b.encoding))[0]
    steps.append({"step": "common_encoding", "cells": common.grid.n_cells, "target": len(common.target)})
    refined = connective_refinement(common)
    steps.append({"step": "connective_refinement", "target": len(refined.target)})
    src = reencode(a, refined).module
    tgt = reencode(b, refined).module
    steps.append({"step": "pullback", "source_dim": src.total_dim, "target_dim": tgt.total_dim})
    logger.debug("pipeline prepared: %s", steps)
    return refined, src, tgt, steps


def abelian_pipeline(a: EncodedModule, b: EncodedModule, spec: PhiSpec, operation: str) -> PipelineResult:
    if operation not in OPERATIONS:
        raise ParseError(f"Unknown operation {operation!r}", {"operation": operation, "known": sorted(OPERATIONS)})
    refined, src, tgt, steps = prepare(a, b)
    return finish(refined, src, tgt, spec, operation, steps)


def finish(
    refined: Encoding,
    src: PfdModule,
    tgt: PfdModule,
    spec: PhiSpec,
    operation: str,
    steps: List[Dict[str, Any]],
) -> PipelineResult:
    """Steps after the pullback: assemble phi, run the operation, certify the fibers."""
    steps = list(steps)
    phi = assemble_phi(spec, src, tgt, refined)
    steps.append({"step": "assemble", "kind": spec.kind})
    obj, canonical = OPERATIONS[operation](phi)
    steps.append({"step": operation, "total_dim": obj.total_dim})
    report = fibers_in_closed_class(refined)
    steps.append({"step": "certify", "ok": report.ok, "complete": report.complete})
    logger.debug("pipeline %s: result total dim %d", operation, obj.total_dim)
    return PipelineResult(operation, refined, src, tgt, phi, EncodedModule(refined, obj), canonical, report, steps)


def hom_dimension(a: EncodedModule, b: EncodedModule) -> int:
    _, src, tgt, _ = prepare(a, b)
    return hom_space(src, tgt)[0]


def unrefined_hom_dimension(a: EncodedModule, b: EncodedModule) -> int:
    """Hom dimension over the plain common encoding, skipping the refinement step."""
    common = validate_encoding(common_encoding(a.encoding, b.encoding))[0]
    return hom_space(reencode(a, common).module, reencode(b, common).module)[0]

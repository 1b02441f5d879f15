"""
Seeded random data and the acceptance suites.

Every generator takes a numpy Generator, so a suite run is a pure function of
its seed and SuiteConfig. Each suite returns a SuiteSummary; a failing case is
recorded with enough data to reproduce it instead of raising.
"""

from __future__ import annotations

import json
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from persenc.config import DEFAULT_FIELD_CHAR, DEFAULT_SEED, SuiteConfig
from persenc.errors import NotClosedClass, PersencError
from persenc.geometry.encoding import Encoding, connective_refinement, validate_encoding
from persenc.geometry.staircase import (
    CellSet,
    Grid,
    closed_interval_decompose,
    down_closure,
    from_points,
    interior,
    is_closed_class_interval,
    is_interval,
    leq_components_cells,
    principal_upset,
    tilde,
    topological_closure,
    topological_components,
    underline,
    union,
    up_closure,
)
from persenc.modules.persistence import (
    PfdModule,
    cokernel,
    counit_check,
    hom_space,
    interval_module,
    pullback,
    upset_morphism,
)
from persenc.modules.pipeline import (
    EncodedModule,
    PhiSpec,
    encode_interval_module,
    encoded_direct_sum,
    finish,
    prepare,
)
from persenc.oracle.oracle import SamplePlan, crosscheck_result
from persenc.order.poset import (
    FinitePoset,
    MonotoneMap,
    antichain,
    chain,
    check_ff_conditions,
    component_refinement,
    poset_from_relations,
)

logger = logging.getLogger(__name__)


class SuiteSummary(BaseModel):
    name: str
    cases: int
    failures: int
    ok: bool
    details: Dict[str, Any] = Field(default_factory=dict)


def _summary(name: str, cases: int, failed: List[Dict[str, Any]], **details: Any) -> SuiteSummary:
    if failed:
        details["first_failure"] = failed[0]
    return SuiteSummary(name=name, cases=cases, failures=len(failed), ok=not failed, details=details)


# --- finite posets and modules ---


def random_poset(rng: np.random.Generator, n: int, density: float = 0.35) -> FinitePoset:
    """Random order on range(n): each pair i < j is a generating relation with the given probability."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return poset_from_relations(range(n), pairs)


def random_poset_with_top(rng: np.random.Generator, n: int, density: float = 0.35) -> FinitePoset:
    body = random_poset(rng, max(n - 1, 0), density)
    top = max(n - 1, 0)
    pairs = [(x, y) for x, y in body.relations()] + [(x, top) for x in body.elements]
    return poset_from_relations(list(body.elements) + [top], pairs)


def random_monotone_map(rng: np.random.Generator, source: FinitePoset, target: FinitePoset) -> MonotoneMap:
    """
    Walk the source in a linear extension and send each element to a random
    common upper bound of the images below it; a top element keeps this nonempty.
    """
    assignment: Dict[Any, Any] = {}
    for x in source.topological_order:
        xi = source.index(x)
        allowed = np.ones(len(target), dtype=bool)
        for y in source.elements:
            yi = source.index(y)
            if y in assignment and source.leq[yi, xi]:
                allowed &= target.leq[target.index(assignment[y])]
        options = np.nonzero(allowed)[0]
        assignment[x] = target.elements[int(rng.choice(options))]
    return MonotoneMap(source, target, assignment).validate()


def random_module(rng: np.random.Generator, P: FinitePoset, max_dim: int, p: int) -> PfdModule:
    """Cokernel of a random map between sums of projectives F[up(x)]."""
    n_gen = int(rng.integers(1, max_dim + 1))
    n_rel = int(rng.integers(0, 3))
    gens = [P.elements[int(i)] for i in rng.integers(0, len(P), n_gen)]
    rels = [P.elements[int(i)] for i in rng.integers(0, len(P), n_rel)]
    coeffs = rng.integers(0, p, (n_gen, n_rel))
    return cokernel(upset_morphism(P, rels, gens, coeffs, p))[0]


def ff_cases(seed: int, config: SuiteConfig, count: int) -> Iterator[Tuple[MonotoneMap, np.random.Generator]]:
    """Refined monotone maps: random source and top-bounded target, then component refinement."""
    for case in range(count):
        rng = np.random.default_rng([seed, case])
        src = random_poset(rng, int(rng.integers(1, config.max_source_size + 1)))
        tgt = random_poset_with_top(rng, int(rng.integers(1, config.max_target_size + 1)))
        e = random_monotone_map(rng, src, tgt)
        _, ehat, _ = component_refinement(e)
        yield ehat, rng


# --- staircase data ---


def _breakpoint_cap(n: int, cap: int) -> int:
    # keeps 3-d cell posets at 125 cells
    return cap if n <= 2 else min(cap, 2)


def random_pool(rng: np.random.Generator, n: int, cap: int) -> List[List[int]]:
    k = _breakpoint_cap(n, cap)
    return [sorted(int(v) for v in rng.choice(6, int(rng.integers(1, k + 1)), replace=False)) for _ in range(n)]


def random_grid(rng: np.random.Generator, n: int, cap: int) -> Grid:
    k = _breakpoint_cap(n, cap)
    return Grid(tuple(tuple(sorted(int(v) for v in rng.choice(6, int(rng.integers(0, k + 1)), replace=False))) for _ in range(n)))


def random_cellset(rng: np.random.Generator, grid: Grid, density: Optional[float] = None) -> CellSet:
    d = rng.random() if density is None else density
    return CellSet(grid, rng.random(grid.shape) < d)


def random_closed_upset(rng: np.random.Generator, pool: Sequence[Sequence[int]], max_gens: int = 2) -> CellSet:
    """Union of principal upsets at pool points; a coordinate is -inf with probability 1/5."""
    gens = []
    for _ in range(int(rng.integers(1, max_gens + 1))):
        pt = [None if rng.random() < 0.2 else int(rng.choice(axis)) for axis in pool]
        gens.append(principal_upset(pt))
    return union(*gens)


def random_closed_interval(rng: np.random.Generator, pool: Sequence[Sequence[int]]) -> Tuple[CellSet, CellSet]:
    u = random_closed_upset(rng, pool)
    v = random_closed_upset(rng, pool) if rng.random() < 0.7 else CellSet.empty(Grid.trivial(len(pool)))
    return u, v


def random_encoded_sum(rng: np.random.Generator, pool: Sequence[Sequence[int]], max_terms: int, p: int) -> EncodedModule:
    terms = [encode_interval_module(*random_closed_interval(rng, pool), p) for _ in range(int(rng.integers(1, max_terms + 1)))]
    return encoded_direct_sum(*terms) if len(terms) > 1 else terms[0]


def sample_plan_for(rng: np.random.Generator, pool: Sequence[Sequence[int]]) -> SamplePlan:
    """At most 3 values per axis around the pool, plus two random points in low dimension, closed under suprema."""
    axes = []
    for axis in pool:
        cands = sorted({Fraction(axis[0] - 1)} | {Fraction(v) for v in axis} | {Fraction(v) + Fraction(1, 2) for v in axis})
        pick = rng.choice(len(cands), min(3, len(cands)), replace=False)
        axes.append([cands[int(i)] for i in sorted(pick)])
    plan = SamplePlan.grid(*axes)
    if len(pool) <= 2:
        extra = tuple(
            tuple(Fraction(int(rng.integers(-1, 7)), int(rng.integers(1, 3))) for _ in pool) for _ in range(2)
        )
        plan = plan.union(SamplePlan(tuple(sorted(set(extra))))).close_under_suprema()
    return plan


# --- negative controls ---


def antichain_collapse(p: int = DEFAULT_FIELD_CHAR) -> Dict[str, Any]:
    """e: antichain(2) -> point with M = F: the counit and the hom comparison both fail."""
    src, tgt = antichain(2), chain(1)
    e = MonotoneMap(src, tgt, {0: 0, 1: 0})
    M = interval_module(tgt, [0], p)
    row = counit_check(e, M).rows[0]
    pulled = pullback(e, M)
    return {
        "colimit_dim": row.colimit_dim,
        "target_dim": row.target_dim,
        "injective": row.injective,
        "hom_target": hom_space(M, M)[0],
        "hom_pullback": hom_space(pulled, pulled)[0],
        "ff_conditions": check_ff_conditions(e),
    }


def antidiagonal_points(k: int) -> List[Tuple[int, int]]:
    return [(i, k - 1 - i) for i in range(k)]


def antidiagonal_encoding(k: int) -> Encoding:
    """Chain below < antidiagonal < above, with the antidiagonal as one k-point fiber."""
    nabla = from_points(antidiagonal_points(k))
    below = down_closure(nabla) - nabla
    labels = np.where(nabla.mask, 1, np.where(below.mask, 0, 2))
    return validate_encoding(Encoding(nabla.grid, chain(3), labels))[0]


def antidiagonal_components(k: int) -> Dict[str, Any]:
    e = antidiagonal_encoding(k)
    refined = connective_refinement(e)
    on_nabla = sum(1 for q in refined.target.elements if q[0] == 1)
    return {
        "k": k,
        "leq_components": len(leq_components_cells(from_points(antidiagonal_points(k)))),
        "refined_on_antidiagonal": on_nabla,
        "refined_target": len(refined.target),
    }


def bad_kernel(k: int, p: int = DEFAULT_FIELD_CHAR) -> Dict[str, Any]:
    """
    Discretized map F[U]^2 -> F[nabla] given by (y, -x) at the antidiagonal point
    (x, y) and 0 elsewhere; U is the upset generated by the k points. The kernel
    has a different line at each point, so it needs k refined target elements.
    """
    pts = antidiagonal_points(k)
    nabla = from_points(pts)
    u = up_closure(nabla)
    a = encoded_direct_sum(encode_interval_module(u, CellSet.empty(u.grid), p), encode_interval_module(u, CellSet.empty(u.grid), p))
    b = encode_interval_module(u, u - nabla, p)
    on = {tuple(Fraction(c) for c in pt) for pt in pts}

    def phi(x: Sequence[Fraction]) -> Any:
        if tuple(x) in on:
            return [[int(x[1]), -int(x[0])]]
        return []

    refined, src, tgt, steps = prepare(a, b)
    result = finish(refined, src, tgt, PhiSpec.from_pointwise(phi), "kernel", steps)
    lines = set()
    for pt in pts:
        q = refined.label_of_point(pt)
        basis = result.canonical.at(q)
        if basis.cols == 1:
            v = basis.array[:, 0]
            lead = int(v[np.nonzero(v)[0][0]])
            lines.add(tuple(int(c) for c in (v * pow(lead, -1, p)) % p))
    return {
        "k": k,
        "refined_on_antidiagonal": len({refined.label_of_point(pt) for pt in pts}),
        "distinct_kernel_lines": len(lines),
        "kernel_total_dim": result.module.total_dim,
    }


# --- suites ---


def suite_counit(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    failed = []
    for case, (ehat, rng) in enumerate(ff_cases(seed, config, config.counit_cases)):
        M = random_module(rng, ehat.target, config.max_dim, p)
        if not check_ff_conditions(ehat):
            failed.append({"case": case, "reason": "ff conditions"})
            continue
        report = counit_check(ehat, M)
        if not report.ok:
            failed.append({"case": case, "reason": "counit", "rows": [r.model_dump() for r in report.failures()]})
    return _summary("counit", config.counit_cases, failed)


def suite_full_faithfulness(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    failed = []
    total_hom = 0
    for case, (ehat, rng) in enumerate(ff_cases(seed, config, config.ff_cases)):
        M = random_module(rng, ehat.target, config.max_dim, p)
        N = random_module(rng, ehat.target, config.max_dim, p)
        d_target = hom_space(M, N)[0]
        d_source = hom_space(pullback(ehat, M), pullback(ehat, N))[0]
        total_hom += d_target
        if d_target != d_source:
            failed.append({"case": case, "target": d_target, "source": d_source})
    return _summary("full_faithfulness", config.ff_cases, failed, total_hom_dim=total_hom)


def suite_negative_controls(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    failed = []
    collapse = antichain_collapse(p)
    expected = {"colimit_dim": 2, "target_dim": 1, "injective": False, "hom_target": 1, "hom_pullback": 2}
    for key, want in expected.items():
        if collapse[key] != want:
            failed.append({"check": f"collapse.{key}", "expected": want, "actual": collapse[key]})
    counts = {}
    for k in config.antidiagonal_range:
        row = antidiagonal_components(k)
        counts[str(k)] = row["refined_on_antidiagonal"]
        if row["leq_components"] != k or row["refined_on_antidiagonal"] != k:
            failed.append({"check": "antidiagonal", **row})
    kernels = {}
    for k in config.antidiagonal_range[:3]:
        row = bad_kernel(k, p)
        kernels[str(k)] = row["distinct_kernel_lines"]
        if row["distinct_kernel_lines"] != k or row["refined_on_antidiagonal"] != k:
            failed.append({"check": "bad_kernel", **row})
    cases = len(expected) + len(config.antidiagonal_range) + len(kernels)
    return _summary("negative_controls", cases, failed, collapse=collapse, antidiagonal=counts, kernel_lines=kernels)


def lshape_case(p: int = DEFAULT_FIELD_CHAR) -> Tuple[EncodedModule, EncodedModule, CellSet]:
    """F[[(1,1),inf)], F[[(0,0),inf)] and the L-shape between them; the inclusion is the only map up to scalars."""
    u1, u2 = principal_upset((0, 0)), principal_upset((1, 1))
    empty = CellSet.empty(Grid.trivial(2))
    return encode_interval_module(u2, empty, p), encode_interval_module(u1, empty, p), u1 - u2


def lshape_check(p: int = DEFAULT_FIELD_CHAR) -> Dict[str, Any]:
    """
    Cokernel of F[[(1,1),inf)] -> F[[(0,0),inf)] against the interval module of the
    L-shape. Maps the other way vanish: a natural map out of F[[(0,0),inf)] is
    zero wherever F[[(1,1),inf)] is nonzero, so the L-shape is never a kernel.
    """
    a, b, lshape = lshape_case(p)
    refined, src, tgt, steps = prepare(a, b)
    hom_dim, _ = hom_space(src, tgt)
    result = finish(refined, src, tgt, PhiSpec.from_hom([1] * hom_dim), "cokernel", steps)
    mask = lshape.on(refined.grid).mask
    support = [q for i, q in enumerate(refined.target.elements) if mask[refined.labels == i].all()]
    expected = interval_module(refined.target, support, p)
    plan = SamplePlan.grid(*[[-1, 0, Fraction(1, 2), 1, 2]] * 2)
    report = crosscheck_result(result, a, b, plan)
    return {
        "hom_dim": hom_dim,
        "reverse_hom_dim": hom_space(tgt, src)[0],
        "dims_match": list(expected.dims) == list(result.module.dims),
        "crosscheck_ok": report.ok,
        "pairs": report.pairs,
    }


def suite_pipeline(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    rng = np.random.default_rng(seed)
    failed: List[Dict[str, Any]] = []
    lshape = lshape_check(p)
    if not (lshape["hom_dim"] == 1 and lshape["reverse_hom_dim"] == 0 and lshape["dims_match"] and lshape["crosscheck_ok"]):
        failed.append({"case": "lshape", **lshape})
    checked = 0
    for case in range(config.pipeline_cases):
        n = int(config.dimensions[case % len(config.dimensions)])
        pool = random_pool(rng, n, config.max_breakpoints)
        a = random_encoded_sum(rng, pool, 2, p)
        b = random_encoded_sum(rng, pool, 2, p)
        plan = sample_plan_for(rng, pool)
        refined, src, tgt, steps = prepare(a, b)
        hom_dim = hom_space(src, tgt)[0]
        spec = PhiSpec.from_hom(rng.integers(0, p, hom_dim).tolist())
        for op in ("kernel", "image", "cokernel"):
            try:
                report = crosscheck_result(finish(refined, src, tgt, spec, op, steps), a, b, plan)
            except PersencError as err:
                failed.append({"case": case, "operation": op, "error": err.to_dict()})
                continue
            checked += report.pairs
            if not report.ok:
                failed.append({"case": case, "operation": op, "mismatch": report.mismatches[0].model_dump()})
    return _summary("pipeline", config.pipeline_cases + 1, failed, lshape=lshape, pairs_checked=checked)


def _closure_laws(rng: np.random.Generator, config: SuiteConfig) -> Dict[str, bool]:
    n = int(rng.choice(config.dimensions))
    grid = random_grid(rng, n, config.max_breakpoints)
    u = up_closure(random_cellset(rng, grid))
    v = up_closure(random_cellset(rng, grid))
    d = down_closure(random_cellset(rng, grid))
    vc = underline(v)
    pool = [[int(t) for t in axis] or [0] for axis in grid.breakpoints]
    pieces = [random_closed_interval(rng, pool) for _ in range(int(rng.integers(1, 3)))]
    s = union(*(a - b for a, b in pieces))
    return {
        "underline_upset_is_closure": underline(u) == topological_closure(u),
        "tilde_downset_is_interior": tilde(d) == interior(d),
        "underline_minus_closed": underline(u - vc) == underline(u) - vc,
        "tilde_minus_upset": tilde(u - v) == u & tilde(~v),
        "closed_combination_fixed": underline(s) == s and tilde(s) == s,
        "components_fixed": all(underline(c) == c and tilde(c) == c for c in leq_components_cells(s)),
    }


def suite_closure_laws(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    rng = np.random.default_rng(seed)
    failed = []
    for case in range(config.closure_cases):
        laws = _closure_laws(rng, config)
        broken = [name for name, holds in laws.items() if not holds]
        if broken:
            failed.append({"case": case, "laws": broken})
    return _summary("closure_laws", config.closure_cases, failed)


def _partition(parts: Sequence[CellSet]) -> List[List[Tuple[int, ...]]]:
    return sorted(sorted(c.cells()) for c in parts)


def suite_components(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    rng = np.random.default_rng(seed)
    failed = []
    for case in range(config.component_cases):
        n = int(rng.choice(config.dimensions))
        grid = random_grid(rng, n, config.max_breakpoints)
        closed_up = underline(up_closure(random_cellset(rng, grid, 0.15)))
        open_down = tilde(down_closure(random_cellset(rng, grid, 0.15)))
        s = closed_up & open_down
        if _partition(leq_components_cells(s)) != _partition(topological_components(s)):
            failed.append({"case": case, "check": "leq_vs_topological", "cells": len(s)})
        interval = up_closure(random_cellset(rng, grid, 0.1)) & down_closure(random_cellset(rng, grid, 0.1))
        if not all(is_interval(c) for c in leq_components_cells(interval)):
            failed.append({"case": case, "check": "components_of_interval"})
    return _summary("components", config.component_cases, failed)


def suite_intervals(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    rng = np.random.default_rng(seed)
    failed: List[Dict[str, Any]] = []
    for case in range(config.interval_cases):
        n = int(rng.choice(config.dimensions))
        pool = random_pool(rng, n, config.max_breakpoints)
        u, v = random_closed_upset(rng, pool), random_closed_upset(rng, pool)
        i = u - v
        if not is_closed_class_interval(i):
            failed.append({"case": case, "check": "closed_class"})
            continue
        uu, vv = closed_interval_decompose(i)
        if uu - vv != i:
            failed.append({"case": case, "check": "reconstruct"})
    closed_square = principal_upset((1, 1)) & down_closure(from_points([(2, 2)]))
    try:
        closed_interval_decompose(closed_square)
        failed.append({"case": "square", "check": "closed square accepted"})
    except NotClosedClass:
        pass
    return _summary("intervals", config.interval_cases + 1, failed)


SUITES: Dict[str, Callable[[int, SuiteConfig, int], SuiteSummary]] = {
    "counit": suite_counit,
    "full_faithfulness": suite_full_faithfulness,
    "negative_controls": suite_negative_controls,
    "pipeline": suite_pipeline,
    "closure_laws": suite_closure_laws,
    "components": suite_components,
    "intervals": suite_intervals,
}
DEFAULT_SUITES = list(SUITES)


def run_suites(
    names: Optional[Sequence[str]] = None,
    seed: int = DEFAULT_SEED,
    config: Optional[SuiteConfig] = None,
    p: int = DEFAULT_FIELD_CHAR,
) -> List[SuiteSummary]:
    config = config or SuiteConfig()
    out = []
    for name in names or DEFAULT_SUITES:
        if name not in SUITES:
            raise KeyError(f"Unknown suite {name!r}")
        logger.debug("running suite %s (seed %d)", name, seed)
        out.append(SUITES[name](seed, config, p))
    return out


def suite_determinism(seed: int, config: SuiteConfig, p: int) -> SuiteSummary:
    """Runs every other suite twice and compares the serialized summaries byte for byte."""
    first = json.dumps([s.model_dump() for s in run_suites(DEFAULT_SUITES, seed=seed, config=config, p=p)], sort_keys=True)
    second = json.dumps([s.model_dump() for s in run_suites(DEFAULT_SUITES, seed=seed, config=config, p=p)], sort_keys=True)
    failed = [] if first == second else [{"check": "summaries differ"}]
    return _summary("determinism", 2, failed, bytes=len(first))


def summary_table(summaries: Sequence[SuiteSummary]) -> pd.DataFrame:
    return pd.DataFrame([{"suite": s.name, "cases": s.cases, "failures": s.failures, "ok": s.ok} for s in summaries])


SUITES["determinism"] = suite_determinism

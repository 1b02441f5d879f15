import dataclasses
from fractions import Fraction

import pytest

from persenc.errors import DimensionMismatch, Mismatch, ParseError
from persenc.geometry.staircase import CellSet, Grid, principal_upset
from persenc.modules.pipeline import EncodedModule, PhiSpec, abelian_pipeline, encode_interval_module
from persenc.oracle.oracle import (
    CrosscheckReport,
    Discrepancy,
    SamplePlan,
    crosscheck_operation,
    crosscheck_result,
    evaluate,
    plan_from_json,
    restrict_to_samples,
    sample_table,
    transition,
)
from persenc.oracle.scenarios import lshape_case

EMPTY = CellSet.empty(Grid.trivial(2))
QUADRANT = encode_interval_module(principal_upset((0, 0)), EMPTY, 101)
PLAN = SamplePlan.grid(*[[-1, 0, Fraction(1, 2), 1, 2]] * 2)


def test_sample_plan_validation():
    with pytest.raises(ValueError):
        SamplePlan(())
    with pytest.raises(DimensionMismatch):
        SamplePlan(((0, 0), (1,)))
    # "0" and 0 are the same rational
    with pytest.raises(ParseError) as info:
        SamplePlan(((0, 0), ("0", "0")))
    assert info.value.certificate == {"duplicates": 1}
    with pytest.raises(ParseError):
        SamplePlan(())
    with pytest.raises(ParseError):
        plan_from_json({"close": True})


def test_grid_plan_and_suprema():
    plan = SamplePlan.grid([1, -1, 1], [0])
    assert plan.points == ((Fraction(-1), Fraction(0)), (Fraction(1), Fraction(0)))
    assert plan.dim == 2
    closed = SamplePlan(((0, 1), (1, 0))).close_under_suprema()
    assert (Fraction(1), Fraction(1)) in closed.points
    assert len(closed.points) == 3


def test_evaluate_quadrant():
    assert evaluate(QUADRANT, (-1, -1)) == 0
    assert evaluate(QUADRANT, (1, 1)) == 1
    assert evaluate(QUADRANT, (0, 0)) == 1
    assert evaluate(QUADRANT, ("-1/3", 5)) == 0


def test_transition_maps():
    inside = transition(QUADRANT, (0, 0), (2, 3))
    assert inside.shape == (1, 1)
    assert not inside.is_zero()
    assert transition(QUADRANT, (-1, 0), (0, 0)).shape == (1, 0)
    with pytest.raises(ValueError):
        transition(QUADRANT, (1, 1), (0, 2))


def test_restrict_to_two_by_two_plan():
    plan = SamplePlan.grid([-1, 1], [-1, 1])
    M = restrict_to_samples(QUADRANT, plan)
    assert M.dims == (0, 0, 0, 1)
    assert len(M.base.covers) == 4


def test_lshape_cokernel_crosschecks():
    a, b, _ = lshape_case()
    result = abelian_pipeline(a, b, PhiSpec.from_hom([1]), "cokernel")
    report = crosscheck_result(result, a, b, PLAN)
    assert report.ok
    assert report.points == 25
    assert report.pairs > 0
    assert report.to_frame().empty
    assert report.raise_for_status() is report


@pytest.mark.parametrize("op", ["kernel", "image"])
def test_other_operations_crosscheck(op):
    a, b, _ = lshape_case()
    assert crosscheck_operation(op, a, b, PhiSpec.from_hom([1]), PLAN).ok


def test_tampered_result_is_caught():
    a, b, _ = lshape_case()
    result = abelian_pipeline(a, b, PhiSpec.from_hom([1]), "cokernel")
    # report the source instead of the cokernel
    wrong = dataclasses.replace(result, result=EncodedModule(result.refined, result.source))
    report = crosscheck_result(wrong, a, b, PLAN, stop_at_first=True)
    assert not report.ok
    assert len(report.mismatches) == 1
    assert report.mismatches[0].kind == "dim"
    assert report.mismatches[0].points == ["(0, 0)"]
    assert report.mismatches[0].expected == 1
    assert report.mismatches[0].actual == 0
    with pytest.raises(Mismatch):
        report.raise_for_status()


def test_swapped_inputs_report_phi_shapes():
    a, b, _ = lshape_case()
    result = abelian_pipeline(a, b, PhiSpec.from_hom([1]), "cokernel")
    # on the L-shape phi is 1 x 0, the swapped inputs expect 0 x 1
    first = crosscheck_result(result, b, a, PLAN, stop_at_first=True)
    assert [m.model_dump() for m in first.mismatches] == [
        {"kind": "phi_shape", "points": ["(0, 0)"], "expected": [0, 1], "actual": [1, 0]}
    ]
    every = crosscheck_result(result, b, a, PLAN)
    assert {m.kind for m in every.mismatches} == {"phi_shape"}
    assert len(every.mismatches) == 12
    assert every.pairs == 0


def test_raise_for_status_carries_the_discrepancy():
    bad = Discrepancy(kind="rank", points=["(0, 0)", "(1, 1)"], expected=1, actual=0)
    report = CrosscheckReport(operation="image", points=2, pairs=1, mismatches=[bad], ok=False)
    with pytest.raises(Mismatch) as info:
        report.raise_for_status()
    assert info.value.certificate["points"] == ["(0, 0)", "(1, 1)"]
    assert list(report.to_frame().columns) == ["kind", "points", "expected", "actual"]


def test_sample_table():
    table = sample_table(QUADRANT, SamplePlan.grid([-1, 1], [1]))
    assert list(table.columns) == ["point", "label", "dim"]
    assert table["dim"].tolist() == [0, 1]
    assert table["point"].tolist() == ["(-1, 1)", "(1, 1)"]


def test_plan_from_json():
    assert len(plan_from_json({"grid": [["0", "1/2"], [0, 1]]}).points) == 4
    closed = plan_from_json({"points": [[0, 1], [1, 0]], "close": True})
    assert len(closed.points) == 3
    with pytest.raises(DimensionMismatch):
        plan_from_json({"points": [[0, 1]]}, dim=3)

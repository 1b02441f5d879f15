import pytest

from persenc.errors import DimensionMismatch, FieldMismatch, ParseError
from persenc.geometry.staircase import CellSet, Grid, principal_upset
from persenc.modules.persistence import interval_module, validate_module, validate_morphism
from persenc.modules.pipeline import (
    EncodedModule,
    PhiSpec,
    abelian_pipeline,
    encode_interval_module,
    encoded_direct_sum,
    hom_dimension,
    prepare,
    reencode,
    unrefined_hom_dimension,
)
from persenc.oracle.oracle import evaluate
from persenc.oracle.scenarios import antidiagonal_encoding
from persenc.order.poset import chain


def F(u, v=None, p=101):
    v = v if v is not None else CellSet.empty(Grid.trivial(u.grid.dim))
    return encode_interval_module(u, v, p)


U1 = principal_upset((0, 0))
U2 = principal_upset((1, 1))


def test_interval_encoding_module_evaluates_to_the_interval():
    A = F(U1, U2).validate()
    assert evaluate(A, (0, 0)) == 1
    assert evaluate(A, ("1/2", 5)) == 1
    assert evaluate(A, (1, 1)) == 0
    assert evaluate(A, (-1, 3)) == 0


def test_identity_kernel_is_zero_over_the_same_encoding():
    A = F(U1)
    result = abelian_pipeline(A, A, PhiSpec.identity(), "kernel")
    assert result.module.is_zero()
    assert len(result.refined.target) == 2
    assert [s["step"] for s in result.steps] == [
        "common_encoding",
        "connective_refinement",
        "pullback",
        "assemble",
        "kernel",
        "certify",
    ]
    image = abelian_pipeline(A, A, PhiSpec.identity(), "image")
    assert image.module.dims == image.target.dims


def test_lshape_cokernel_matches_interval_module():
    A, B = F(U2), F(U1)
    assert hom_dimension(A, B) == 1
    result = abelian_pipeline(A, B, PhiSpec.from_hom([1]), "cokernel")
    validate_module(result.module)
    validate_morphism(result.canonical)
    refined = result.refined
    lshape = (U1 - U2).on(refined.grid).mask
    support = [q for i, q in enumerate(refined.target.elements) if lshape[refined.labels == i].all()]
    expected = interval_module(refined.target, support)
    assert result.module.dims == expected.dims
    assert result.report.ok
    assert result.report.complete


def test_inclusion_image_and_kernel():
    A, B = F(U2), F(U1)
    image = abelian_pipeline(A, B, PhiSpec.from_hom([1]), "image")
    assert image.module.dims == image.source.dims
    kernel = abelian_pipeline(A, B, PhiSpec.from_hom([1]), "kernel")
    assert kernel.module.is_zero()


def test_no_nonzero_map_out_of_the_larger_upset():
    A, B = F(U1), F(U2)
    assert hom_dimension(A, B) == 0
    assert unrefined_hom_dimension(A, B) == 0
    result = abelian_pipeline(A, B, PhiSpec.from_hom([]), "kernel")
    assert result.module.dims == result.source.dims
    assert result.phi.is_zero()


def test_inclusion_cokernel_is_the_lshape():
    A, B = F(U2), F(U1)
    result = abelian_pipeline(A, B, PhiSpec.from_hom([1]), "cokernel")
    E = EncodedModule(result.refined, result.module)
    assert evaluate(E, (0, 0)) == 1
    assert evaluate(E, (5, 0)) == 1
    assert evaluate(E, (1, 1)) == 0
    assert evaluate(E, (-1, -1)) == 0


def test_zero_morphism_from_coefficients():
    A, B = F(U2), F(U1)
    result = abelian_pipeline(A, B, PhiSpec.from_hom([0]), "cokernel")
    assert result.module.dims == result.target.dims
    assert result.phi.is_zero()


def test_hom_coefficients_must_match_the_basis():
    A, B = F(U2), F(U1)
    with pytest.raises(DimensionMismatch) as err:
        abelian_pipeline(A, B, PhiSpec.from_hom([1, 2]), "kernel")
    assert err.value.certificate == {"hom_dim": 1, "coefficients": 2}


def test_empty_hom_space_gives_zero_morphism():
    # the L-shape module vanishes on U2
    A, B = F(U2), F(U1, U2)
    assert hom_dimension(A, B) == 0
    result = abelian_pipeline(A, B, PhiSpec.from_hom([]), "cokernel")
    assert result.module.total_dim == result.target.total_dim


def test_unknown_operation_and_presentation():
    A = F(U1)
    with pytest.raises(ParseError):
        abelian_pipeline(A, A, PhiSpec.identity(), "pushout")
    with pytest.raises(ParseError):
        PhiSpec("matrix")


def test_field_mismatch():
    with pytest.raises(FieldMismatch):
        prepare(F(U1, p=101), F(U2, p=7))


def test_pointwise_presentation():
    A, B = F(U2), F(U1)

    def phi(x):
        return [[1]] if x[0] >= 1 and x[1] >= 1 else []

    spec = PhiSpec.from_pointwise(phi)
    assert spec.kind == "pointwise"
    result = abelian_pipeline(A, B, spec, "cokernel")
    expected = abelian_pipeline(A, B, PhiSpec.from_hom([1]), "cokernel")
    assert result.module.dims == expected.module.dims


def test_encoded_direct_sum_and_reencode():
    S = encoded_direct_sum(F(U1), F(U2))
    assert evaluate(S, (2, 2)) == 2
    assert evaluate(S, (0, 2)) == 1
    assert evaluate(S, (-1, 2)) == 0
    refined, src, _, _ = prepare(S, F(U1))
    moved = reencode(S, refined)
    assert moved.module.dims == src.dims


def test_refinement_does_not_change_hom_between_intervals():
    A, B = F(U2), F(U1)
    assert unrefined_hom_dimension(A, B) == hom_dimension(A, B) == 1


@pytest.mark.parametrize("k", [2, 3, 5])
def test_refinement_recovers_endomorphisms_of_a_split_fiber(k):
    # k incomparable points share one fiber until refinement
    E = EncodedModule(antidiagonal_encoding(k), interval_module(chain(3), [1]))
    assert unrefined_hom_dimension(E, E) == 1
    assert hom_dimension(E, E) == k

import numpy as np
import pytest

from persenc.algebra.exactlinalg import Matrix
from persenc.errors import DimensionMismatch, NotCommutative, NotInterval, NotNatural
from persenc.modules.persistence import (
    Morphism,
    PfdModule,
    cokernel,
    colimit_over_downset,
    compose,
    counit_check,
    direct_sum,
    direct_sum_morphism,
    hom_space,
    identity_morphism,
    image,
    interval_module,
    kernel,
    linear_combination,
    module_table,
    pullback,
    pullback_morphism,
    restrict_module,
    structure_map,
    upset_module,
    upset_morphism,
    validate_module,
    validate_morphism,
    zero_morphism,
)
from persenc.order.poset import (
    MonotoneMap,
    antichain,
    chain,
    component_refinement,
    identity_map,
    point,
    poset_from_relations,
)
from persenc.order.poset import compose as compose_maps

P101 = 101


def diamond():
    return poset_from_relations("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


def ab():
    return poset_from_relations(["a", "b"], [("a", "b")])


def constant_module(P, p=P101):
    return interval_module(P, P.elements, p)


def test_interval_module_on_diamond_is_valid():
    M = validate_module(constant_module(diamond()))
    assert M.dims == (1, 1, 1, 1)
    assert structure_map(M, "a", "d") == Matrix.identity(1)


def test_negated_edge_breaks_commutativity():
    D = diamond()
    one = Matrix.identity(1)
    maps = {("a", "b"): one, ("a", "c"): one, ("b", "d"): one, ("c", "d"): Matrix([[-1]])}
    M = PfdModule.from_elements(D, {x: 1 for x in "abcd"}, maps)
    with pytest.raises(NotCommutative) as err:
        validate_module(M)
    assert err.value.certificate["composites"] == [[[1]], [[100]]]


def test_modules_over_chains_are_always_valid():
    P = chain(3)
    maps = {(0, 1): Matrix([[1, 2]]), (1, 2): Matrix([[3], [4]])}
    M = validate_module(PfdModule.from_elements(P, {0: 2, 1: 1, 2: 2}, maps))
    assert structure_map(M, 0, 2) == Matrix([[3, 6], [4, 8]])


def test_cover_map_shape_is_checked():
    with pytest.raises(DimensionMismatch):
        PfdModule.from_elements(chain(2), {0: 1, 1: 1}, {(0, 1): Matrix([[1, 1]])})


def test_interval_modules():
    assert interval_module(chain(3), []).is_zero()
    M = interval_module(chain(3), [0, 1, 2])
    assert M.dims == (1, 1, 1)
    assert all(m == Matrix.identity(1) for m in M.covers.values())

    N = validate_module(interval_module(diamond(), ["b", "c"]))
    assert N.dims == (0, 1, 1, 0)
    assert structure_map(N, "a", "d").shape == (0, 0)
    assert structure_map(N, "b", "d").shape == (0, 1)

    with pytest.raises(NotInterval):
        interval_module(chain(3), [0, 2])


def test_structure_map_needs_comparable_elements():
    with pytest.raises(ValueError):
        structure_map(constant_module(diamond()), "b", "c")


def test_pullbacks():
    D = diamond()
    M = constant_module(D)
    same = pullback(identity_map(D), M)
    assert same.dims == M.dims

    collapse = MonotoneMap(chain(3), point(), {0: 0, 1: 0, 2: 0})
    C = pullback(collapse, constant_module(point()))
    assert C.dims == (1, 1, 1)
    assert structure_map(C, 0, 2) == Matrix.identity(1)

    top = MonotoneMap(chain(3), chain(2), {0: 0, 1: 1, 2: 1})
    T = pullback(top, interval_module(chain(2), [1]))
    assert T.dims == (0, 1, 1)
    assert T.cover_map(1, 2) == Matrix.identity(1)


def test_hom_dimensions():
    assert hom_space(constant_module(point()), constant_module(point()))[0] == 1
    P = ab()
    full = constant_module(P)
    assert hom_space(interval_module(P, ["b"]), full)[0] == 1
    assert hom_space(interval_module(P, ["a"]), full)[0] == 0
    assert hom_space(constant_module(antichain(2)), constant_module(antichain(2)))[0] == 2


def test_hom_basis_elements_are_natural():
    D = diamond()
    M = direct_sum(upset_module(D, "a"), upset_module(D, "b"))
    N = constant_module(D)
    dim, basis = hom_space(M, N)
    assert dim == 2
    for phi in basis:
        validate_morphism(phi)
    combo = linear_combination([3, 5], basis)
    validate_morphism(combo)


def test_operations_on_the_identity():
    M = upset_module(diamond(), "b")
    phi = identity_morphism(M)
    assert kernel(phi)[0].is_zero()
    assert image(phi)[0].dims == M.dims
    assert cokernel(phi)[0].is_zero()


def test_kernel_and_image_of_quotient_to_downset():
    P = ab()
    full, low, high = constant_module(P), interval_module(P, ["a"]), interval_module(P, ["b"])
    quotient = validate_morphism(
        Morphism.from_elements(full, low, {"a": Matrix.identity(1)})
    )
    ker, inclusion = kernel(quotient)
    assert ker.dims == high.dims
    validate_morphism(inclusion)
    assert compose(quotient, inclusion).is_zero()
    im, _ = image(quotient)
    assert im.dims == low.dims


def test_cokernel_of_upset_inclusion_is_the_downset_module():
    P = ab()
    full, low, high = constant_module(P), interval_module(P, ["a"]), interval_module(P, ["b"])
    inclusion = validate_morphism(Morphism.from_elements(high, full, {"b": Matrix.identity(1)}))
    cok, projection = cokernel(inclusion)
    assert cok.dims == low.dims
    validate_module(cok)
    validate_morphism(projection)
    assert compose(projection, inclusion).is_zero()


def test_non_natural_components_are_rejected():
    P = ab()
    full, high = constant_module(P), interval_module(P, ["b"])
    bad = Morphism.from_elements(full, high, {"b": Matrix.identity(1)})
    with pytest.raises(NotNatural) as err:
        validate_morphism(bad)
    assert err.value.certificate["cover"] == ["'a'", "'b'"]


def test_finitely_presented_module_is_valid():
    D = diamond()
    phi = upset_morphism(D, ["b", "c"], ["a"], np.array([[1, 1]]))
    validate_morphism(phi)
    cok, _ = cokernel(phi)
    validate_module(cok)
    # F[up a] modulo the images of F[up b] and F[up c]
    assert cok.dims == (1, 0, 0, 0)


def test_direct_sums_and_restriction():
    D = diamond()
    M = upset_module(D, "b")
    S = direct_sum(M, constant_module(D))
    assert S.dims == (1, 2, 1, 2)
    psi = direct_sum_morphism(identity_morphism(M), zero_morphism(constant_module(D), constant_module(D)))
    assert psi.source.dims == S.dims
    R = restrict_module(constant_module(D), ["a", "d"])
    assert R.base.covers == (("a", "d"),)
    assert R.cover_map("a", "d") == Matrix.identity(1)


def test_pullback_morphism():
    f = MonotoneMap(chain(3), chain(2), {0: 0, 1: 1, 2: 1})
    M = constant_module(chain(2))
    phi = identity_morphism(M)
    pulled = validate_morphism(pullback_morphism(f, phi))
    assert pulled.source.dims == (1, 1, 1)


def test_colimits_over_downsets():
    F = constant_module(point())
    e = MonotoneMap(antichain(2), point(), {0: 0, 1: 0})
    assert colimit_over_downset(e, F, [0]).dimension == 1
    assert colimit_over_downset(e, F, [0, 1]).dimension == 2
    c = MonotoneMap(chain(2), point(), {0: 0, 1: 0})
    assert colimit_over_downset(c, F, [0, 1]).dimension == 1
    with pytest.raises(ValueError):
        colimit_over_downset(c, F, [1])


def test_counit_fails_on_antichain_collapse():
    e = MonotoneMap(antichain(2), point(), {0: 0, 1: 0})
    report = counit_check(e, constant_module(point()))
    assert not report.ok
    (row,) = report.failures()
    assert (row.colimit_dim, row.target_dim, row.injective, row.surjective) == (2, 1, False, True)


def test_counit_is_iso_for_identity_and_refined_maps():
    D = diamond()
    assert counit_check(identity_map(D), constant_module(D)).ok
    e = MonotoneMap(antichain(2), point(), {0: 0, 1: 0})
    phat, ehat, _ = component_refinement(e)
    M = direct_sum(upset_module(phat, phat.elements[0]), constant_module(phat))
    report = counit_check(ehat, M)
    assert report.ok
    assert list(report.to_frame()["iso"]) == [True, True]


def test_module_table():
    df = module_table(upset_module(diamond(), "c"))
    assert list(df["dim"]) == [0, 0, 1, 1]


def test_pullback_along_a_composite():
    f = MonotoneMap(chain(4), diamond(), {0: "a", 1: "b", 2: "b", 3: "d"})
    g = MonotoneMap(diamond(), chain(3), {"a": 0, "b": 1, "c": 1, "d": 2})
    M = direct_sum(interval_module(chain(3), [1, 2]), interval_module(chain(3), [0, 1]))
    once = pullback(compose_maps(g, f), M)
    twice = pullback(f, pullback(g, M))
    assert once.dims == twice.dims == (1, 2, 2, 1)
    for x, y in chain(4).covers:
        assert once.cover_map(x, y) == twice.cover_map(x, y)
    assert structure_map(once, 0, 3) == structure_map(M, 0, 2)

import numpy as np
import pytest

from persenc.errors import CycleDetected, NotMonotone, UnknownElement
from persenc.order.poset import (
    FinitePoset,
    MonotoneMap,
    antichain,
    chain,
    check_ff_conditions,
    component_refinement,
    compose,
    downset_of,
    explain_ff_conditions,
    identity_map,
    is_interval,
    is_upset,
    leq_components,
    pairing,
    point,
    poset_from_relations,
    product,
    projection,
    sub_poset,
    to_dot,
    upset_of,
)


def diamond() -> FinitePoset:
    return poset_from_relations("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


def test_poset_from_relations_builds_closure_and_covers():
    P = poset_from_relations(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert P.le("a", "c")
    assert not P.le("c", "a")
    assert set(P.covers) == {("a", "b"), ("b", "c")}
    assert P.is_valid()

    one = poset_from_relations(["a"], [])
    assert len(one) == 1 and one.covers == ()


def test_cycle_is_rejected_with_certificate():
    with pytest.raises(CycleDetected) as err:
        poset_from_relations(["a", "b"], [("a", "b"), ("b", "a")])
    assert err.value.certificate["cycle"]


def test_unknown_element_in_relation():
    with pytest.raises(UnknownElement):
        poset_from_relations(["a"], [("a", "z")])


def test_upsets_and_downsets():
    P = poset_from_relations("abc", [("a", "b"), ("b", "c")])
    assert upset_of(P, ["b"]) == ["b", "c"]
    assert upset_of(antichain(2), [0]) == [0]
    D = diamond()
    assert upset_of(D, ["b"]) == ["b", "d"]
    assert downset_of(D, ["b"]) == ["a", "b"]
    assert is_upset(D, ["b", "c", "d"])
    assert not is_upset(D, ["b"])


def test_is_interval():
    P = poset_from_relations("abc", [("a", "b"), ("b", "c")])
    assert not is_interval(P, ["a", "c"])
    assert is_interval(P, [])
    assert is_interval(diamond(), ["b", "c"])


def test_leq_components_stay_inside_the_subset():
    assert sorted(map(sorted, leq_components(antichain(2), [0, 1]))) == [[0], [1]]
    assert leq_components(chain(2), [0, 1]) == [frozenset({0, 1})]
    V = poset_from_relations("abc", [("a", "c"), ("b", "c")])
    assert leq_components(V, ["a", "b"]) == [frozenset({"a"}), frozenset({"b"})]


def test_products():
    assert product(point(), diamond()) == FinitePoset(
        [(0, x) for x in "abcd"], diamond().leq
    )
    sq = product(chain(2), chain(2))
    assert len(sq.covers) == 4
    assert sq.le((0, 0), (1, 1)) and not sq.le((0, 1), (1, 0))
    anti = product(antichain(2), antichain(2))
    assert np.array_equal(anti.leq, np.eye(4, dtype=bool))


def test_equality_is_up_to_element_order():
    P = poset_from_relations(["a", "b"], [("a", "b")])
    Q = poset_from_relations(["b", "a"], [("a", "b")])
    assert P == Q
    assert P != poset_from_relations(["a", "b"], [("b", "a")])


def test_monotone_map_validation():
    f = MonotoneMap(chain(2), chain(2), {0: 1, 1: 0})
    with pytest.raises(NotMonotone) as err:
        f.validate()
    assert err.value.certificate["pair"] == ["0", "1"]
    with pytest.raises(UnknownElement):
        MonotoneMap(chain(2), chain(2), {0: 0})


def test_compose_pairing_and_projection():
    P = chain(3)
    f = MonotoneMap(P, chain(2), {0: 0, 1: 1, 2: 1})
    g = identity_map(chain(2))
    assert compose(g, f).assignment == f.assignment
    h = pairing(f, MonotoneMap(P, point(), {x: 0 for x in P}))
    assert h(2) == (1, 0)
    back = projection(h.target, chain(2), 0)
    assert compose(back, h).assignment == f.assignment


def test_component_refinement_splits_disconnected_fibers():
    e = MonotoneMap(antichain(2), point(), {0: 0, 1: 0})
    phat, ehat, proj = component_refinement(e)
    assert len(phat) == 2
    assert np.array_equal(phat.leq, np.eye(2, dtype=bool))
    assert check_ff_conditions(ehat)
    assert compose(proj, ehat).assignment == e.assignment

    phat, _, _ = component_refinement(MonotoneMap(chain(2), point(), {0: 0, 1: 0}))
    assert len(phat) == 1


def test_component_refinement_orders_components_by_source_comparabilities():
    src = poset_from_relations("abcd", [("a", "c"), ("b", "c")])
    tgt = poset_from_relations("uv", [("u", "v")])
    e = MonotoneMap(src, tgt, {"a": "u", "b": "u", "d": "u", "c": "v"}).validate()
    phat, ehat, proj = component_refinement(e)
    assert len(phat) == 4
    a, b, c, d = (ehat(x) for x in "abcd")
    assert len({a, b, d}) == 3
    assert phat.le(a, c) and phat.le(b, c)
    assert not phat.le(d, c) and not phat.le(c, d)
    assert proj(d) == "u" and proj(c) == "v"
    assert check_ff_conditions(ehat)


def test_ff_conditions_negative_cases():
    verdict = explain_ff_conditions(MonotoneMap(antichain(2), point(), {0: 0, 1: 0}))
    assert verdict["order_generated"]
    assert not verdict["fibers_connected"]
    assert verdict["bad_fibers"] == [{"element": 0, "components": 2}]
    # the top of chain(2) has an empty fiber
    assert not check_ff_conditions(MonotoneMap(point(), chain(2), {0: 0}))


def test_sub_poset_and_dot_export():
    S = sub_poset(diamond(), ["a", "d"])
    assert S.covers == (("a", "d"),)
    dot = to_dot(diamond(), {"a": "dim 1"})
    assert "digraph" in dot
    assert "dim 1" in dot


@pytest.mark.parametrize("P", [diamond(), chain(4), antichain(3), product(chain(2), chain(3))])
def test_rebuilding_from_the_order_is_idempotent(P):
    assert poset_from_relations(P.elements, P.relations()) == P
    assert poset_from_relations(P.elements, P.covers) == P
    assert poset_from_relations(P.elements, P.covers).covers == P.covers

"""Finite posets, monotone maps and the component refinement."""

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
    is_downset,
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

__all__ = [
    "FinitePoset",
    "MonotoneMap",
    "antichain",
    "chain",
    "check_ff_conditions",
    "component_refinement",
    "compose",
    "downset_of",
    "explain_ff_conditions",
    "identity_map",
    "is_downset",
    "is_interval",
    "is_upset",
    "leq_components",
    "pairing",
    "point",
    "poset_from_relations",
    "product",
    "projection",
    "sub_poset",
    "to_dot",
    "upset_of",
]

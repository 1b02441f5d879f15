"""
Finite posets and monotone maps.

A FinitePoset stores the full reflexive order relation as a boolean matrix; the
Hasse diagram (covers) is derived once and cached. Closures, cycle detection and
connected components go through networkx.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from persenc.errors import CycleDetected, NotMonotone, UnknownElement

logger = logging.getLogger(__name__)

Element = Hashable


class FinitePoset:
    def __init__(
        self,
        elements: Sequence[Element],
        leq: np.ndarray,
        covers: Optional[Iterable[Tuple[Element, Element]]] = None,
    ):
        self.elements: Tuple[Element, ...] = tuple(elements)
        self._index: Dict[Element, int] = {x: i for i, x in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise ValueError("Poset elements must be pairwise distinct")
        leq = np.array(leq, dtype=bool)
        n = len(self.elements)
        if leq.shape != (n, n):
            raise ValueError(f"Relation matrix has shape {leq.shape}, expected {(n, n)}")
        leq.setflags(write=False)
        self.leq = leq
        if covers is not None:
            self.__dict__["covers"] = tuple(covers)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x: object) -> bool:
        try:
            return x in self._index
        except TypeError:
            return False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinitePoset):
            return NotImplemented
        if set(self.elements) != set(other.elements):
            return False
        perm = [other.index(x) for x in self.elements]
        return bool(np.array_equal(self.leq, other.leq[np.ix_(perm, perm)]))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FinitePoset({len(self)} elements, {len(self.covers)} covers)"

    def index(self, x: Element) -> int:
        try:
            return self._index[x]
        except (KeyError, TypeError):
            raise UnknownElement(f"Element {x!r} is not in the poset", {"element": repr(x)}) from None

    def indices(self, xs: Iterable[Element]) -> List[int]:
        return [self.index(x) for x in xs]

    def le(self, x: Element, y: Element) -> bool:
        return bool(self.leq[self.index(x), self.index(y)])

    def mask(self, subset: Iterable[Element]) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        m[self.indices(subset)] = True
        return m

    def from_mask(self, m: np.ndarray) -> List[Element]:
        return [self.elements[i] for i in np.nonzero(m)[0]]

    def relations(self) -> List[Tuple[Element, Element]]:
        """All strict relations x < y."""
        ii, jj = np.nonzero(self.leq & ~np.eye(len(self), dtype=bool))
        return [(self.elements[i], self.elements[j]) for i, j in zip(ii, jj)]

    @cached_property
    def covers(self) -> Tuple[Tuple[Element, Element], ...]:
        lt = (self.leq & ~np.eye(len(self), dtype=bool)).astype(np.int64)
        two_step = (lt @ lt) > 0
        ii, jj = np.nonzero(lt.astype(bool) & ~two_step)
        return tuple((self.elements[i], self.elements[j]) for i, j in zip(ii, jj))

    @cached_property
    def hasse(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.elements)
        g.add_edges_from(self.covers)
        return g

    @cached_property
    def topological_order(self) -> Tuple[Element, ...]:
        # number of elements below is a linear extension
        below = self.leq.sum(axis=0)
        order = sorted(range(len(self)), key=lambda i: (int(below[i]), i))
        return tuple(self.elements[i] for i in order)

    def is_valid(self) -> bool:
        """Reflexive, antisymmetric and transitive."""
        leq = self.leq
        n = len(self)
        if not leq[np.arange(n), np.arange(n)].all():
            return False
        if (leq & leq.T & ~np.eye(n, dtype=bool)).any():
            return False
        li = leq.astype(np.int64)
        return bool(np.array_equal((li @ li) > 0, leq))


def _closure_matrix(n: int, pairs: Iterable[Tuple[int, int]]) -> np.ndarray:
    """Reflexive-transitive closure of index pairs; raises CycleDetected on a nontrivial cycle."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, j) for i, j in pairs if i != j)
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        raise CycleDetected("Generating relations contain a cycle", {"cycle": [list(e) for e in cycle]})
    closed = nx.transitive_closure_dag(g)
    leq = nx.to_numpy_array(closed, nodelist=range(n), dtype=bool) if n else np.zeros((0, 0), bool)
    return leq | np.eye(n, dtype=bool)


def poset_from_relations(
    elements: Sequence[Element], pairs: Iterable[Tuple[Element, Element]]
) -> FinitePoset:
    """Reflexive-transitive closure of the generating pairs."""
    elements = tuple(elements)
    index = {x: i for i, x in enumerate(elements)}
    idx_pairs = []
    for x, y in pairs:
        if x not in index or y not in index:
            missing = x if x not in index else y
            raise UnknownElement(f"Relation mentions unknown element {missing!r}", {"element": repr(missing)})
        idx_pairs.append((index[x], index[y]))
    try:
        leq = _closure_matrix(len(elements), idx_pairs)
    except CycleDetected as e:
        cycle = [[repr(elements[i]), repr(elements[j])] for i, j in e.certificate["cycle"]]
        raise CycleDetected("Generating relations contain a cycle", {"cycle": cycle}) from None
    return FinitePoset(elements, leq)


def point() -> FinitePoset:
    return chain(1)


def chain(n: int) -> FinitePoset:
    idx = np.arange(n)
    leq = idx[:, None] <= idx[None, :]
    return FinitePoset(range(n), leq, covers=[(i, i + 1) for i in range(n - 1)])


def antichain(n: int) -> FinitePoset:
    return FinitePoset(range(n), np.eye(n, dtype=bool), covers=[])


def sub_poset(P: FinitePoset, subset: Iterable[Element]) -> FinitePoset:
    """Induced order on a subset, listed in P's element order."""
    m = P.mask(subset)
    idx = np.nonzero(m)[0]
    return FinitePoset([P.elements[i] for i in idx], P.leq[np.ix_(idx, idx)])


def upset_of(P: FinitePoset, S: Iterable[Element]) -> List[Element]:
    m = P.mask(S)
    return P.from_mask(P.leq[m].any(axis=0))


def downset_of(P: FinitePoset, S: Iterable[Element]) -> List[Element]:
    m = P.mask(S)
    return P.from_mask(P.leq[:, m].any(axis=1))


def is_upset(P: FinitePoset, S: Iterable[Element]) -> bool:
    m = P.mask(S)
    return bool(np.array_equal(P.leq[m].any(axis=0), m))


def is_downset(P: FinitePoset, S: Iterable[Element]) -> bool:
    m = P.mask(S)
    return bool(np.array_equal(P.leq[:, m].any(axis=1), m))


def is_interval(P: FinitePoset, S: Iterable[Element]) -> bool:
    m = P.mask(S)
    hull = P.leq[m].any(axis=0) & P.leq[:, m].any(axis=1)
    return bool(np.array_equal(hull, m))


def _leq_components_idx(leq: np.ndarray, members: np.ndarray) -> List[List[int]]:
    """Components of the comparability graph restricted to members, sorted by least index."""
    if members.size == 0:
        return []
    sub = leq[np.ix_(members, members)]
    g = nx.from_numpy_array((sub | sub.T).astype(np.int8))
    parts = [sorted(int(members[i]) for i in comp) for comp in nx.connected_components(g)]
    return sorted(parts, key=lambda c: c[0])


def leq_components(P: FinitePoset, S: Iterable[Element]) -> List[frozenset]:
    """Maximal subsets of S connected by zigzags of comparabilities staying inside S."""
    members = np.nonzero(P.mask(S))[0]
    return [frozenset(P.elements[i] for i in part) for part in _leq_components_idx(P.leq, members)]


def product(*posets: FinitePoset) -> FinitePoset:
    """Componentwise order on tuples of elements."""
    elements = list(itertools.product(*(P.elements for P in posets)))
    leq = reduce(lambda a, b: np.kron(a, b), (P.leq.astype(np.int64) for P in posets), np.ones((1, 1), np.int64)) > 0
    covers = []
    for k, P in enumerate(posets):
        others = [Q.elements for Q in posets]
        for x, y in P.covers:
            others[k] = (x,)
            for lo in itertools.product(*others):
                hi = lo[:k] + (y,) + lo[k + 1 :]
                covers.append((lo, hi))
    logger.debug("product of %d posets: %d elements", len(posets), len(elements))
    return FinitePoset(elements, leq, covers=covers)


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    source: FinitePoset
    target: FinitePoset
    assignment: Mapping[Element, Element] = field(repr=False)

    def __post_init__(self) -> None:
        for x in self.source.elements:
            if x not in self.assignment:
                raise UnknownElement(f"Map is undefined on {x!r}", {"element": repr(x)})
            self.target.index(self.assignment[x])

    def __call__(self, x: Element) -> Element:
        self.source.index(x)
        return self.assignment[x]

    @cached_property
    def indices(self) -> np.ndarray:
        return np.array(
            [self.target.index(self.assignment[x]) for x in self.source.elements], dtype=np.int64
        ).reshape(len(self.source))

    def fiber(self, q: Element) -> List[Element]:
        qi = self.target.index(q)
        return [self.source.elements[i] for i in np.nonzero(self.indices == qi)[0]]

    def preimage(self, subset: Iterable[Element]) -> List[Element]:
        m = self.target.mask(subset)
        return [self.source.elements[i] for i in np.nonzero(m[self.indices])[0]]

    def validate(self) -> "MonotoneMap":
        a = self.indices
        ii, jj = np.nonzero(self.source.leq)
        bad = ~self.target.leq[a[ii], a[jj]]
        if bad.any():
            k = int(np.nonzero(bad)[0][0])
            x, y = self.source.elements[ii[k]], self.source.elements[jj[k]]
            raise NotMonotone(
                f"{x!r} <= {y!r} but {self.assignment[x]!r} is not <= {self.assignment[y]!r}",
                {"pair": [repr(x), repr(y)], "images": [repr(self.assignment[x]), repr(self.assignment[y])]},
            )
        return self


def identity_map(P: FinitePoset) -> MonotoneMap:
    return MonotoneMap(P, P, {x: x for x in P.elements})


def compose(g: MonotoneMap, f: MonotoneMap) -> MonotoneMap:
    """g after f."""
    if f.target != g.source:
        raise ValueError("compose: target of f is not the source of g")
    return MonotoneMap(f.source, g.target, {x: g.assignment[f.assignment[x]] for x in f.source.elements})


def pairing(f: MonotoneMap, g: MonotoneMap) -> MonotoneMap:
    """The map x -> (f(x), g(x)) into the product of the targets."""
    if f.source != g.source:
        raise ValueError("pairing: maps have different sources")
    P = product(f.target, g.target)
    return MonotoneMap(f.source, P, {x: (f.assignment[x], g.assignment[x]) for x in f.source.elements})


def projection(P: FinitePoset, factor: FinitePoset, k: int) -> MonotoneMap:
    """Projection of a poset of tuples (a product or a sub-poset of one) onto its k-th factor."""
    return MonotoneMap(P, factor, {x: x[k] for x in P.elements})


def component_refinement(e: MonotoneMap) -> Tuple[FinitePoset, MonotoneMap, MonotoneMap]:
    """
    Replace each fiber of e by its <=-components.

    Returns (Phat, ehat, proj) with e == proj . ehat. Phat elements are pairs
    (q, k): the k-th component (ordered by least source index) of the fiber over
    q. The order on Phat is generated by comparabilities between components, so
    ehat satisfies both full-faithfulness conditions.
    """
    src, tgt = e.source, e.target
    a = e.indices
    comp_of = np.full(len(src), -1, dtype=np.int64)
    ids: List[Tuple[Element, int]] = []
    for qi, q in enumerate(tgt.elements):
        members = np.nonzero(a == qi)[0]
        for k, part in enumerate(_leq_components_idx(src.leq, members)):
            comp_of[part] = len(ids)
            ids.append((q, k))

    m = len(ids)
    onehot = np.zeros((len(src), m), dtype=np.int64)
    onehot[np.arange(len(src)), comp_of] = 1
    gen = (onehot.T @ src.leq.astype(np.int64) @ onehot) > 0
    ii, jj = np.nonzero(gen)
    try:
        leq = _closure_matrix(m, zip(ii.tolist(), jj.tolist()))
    except CycleDetected as err:
        cycle = [[repr(ids[i]), repr(ids[j])] for i, j in err.certificate["cycle"]]
        raise CycleDetected("Component order has a cycle; input map is not monotone", {"cycle": cycle}) from None

    phat = FinitePoset(ids, leq)
    ehat = MonotoneMap(src, phat, {x: ids[comp_of[i]] for i, x in enumerate(src.elements)})
    proj = MonotoneMap(phat, tgt, {c: c[0] for c in ids})
    logger.debug("component refinement: %d target elements -> %d components", len(tgt), m)
    return phat, ehat, proj


def explain_ff_conditions(e: MonotoneMap) -> Dict[str, Any]:
    """Per-condition verdicts for the full-faithfulness criterion of a monotone map."""
    src, tgt = e.source, e.target
    a = e.indices
    onehot = np.zeros((len(src), len(tgt)), dtype=np.int64)
    onehot[np.arange(len(src)), a] = 1
    gen = (onehot.T @ src.leq.astype(np.int64) @ onehot) > 0
    ii, jj = np.nonzero(gen)
    try:
        generated = _closure_matrix(len(tgt), zip(ii.tolist(), jj.tolist()))
        order_generated = bool(np.array_equal(generated, tgt.leq))
    except CycleDetected:
        order_generated = False

    bad_fibers = []
    for qi, q in enumerate(tgt.elements):
        members = np.nonzero(a == qi)[0]
        n_comp = len(_leq_components_idx(src.leq, members))
        if n_comp != 1:
            bad_fibers.append({"element": q, "components": n_comp})
    return {
        "order_generated": order_generated,
        "fibers_connected": not bad_fibers,
        "bad_fibers": bad_fibers,
        "ok": order_generated and not bad_fibers,
    }


def check_ff_conditions(e: MonotoneMap) -> bool:
    return bool(explain_ff_conditions(e)["ok"])


def to_dot(P: FinitePoset, annotations: Optional[Mapping[Element, str]] = None, name: str = "poset") -> str:
    g = nx.DiGraph(name=name)
    node = {x: f"n{i}" for i, x in enumerate(P.elements)}
    for x in P.elements:
        label = str(x) if not annotations or x not in annotations else f"{x}\\n{annotations[x]}"
        g.add_node(node[x], label=f'"{label}"')
    for x, y in P.covers:
        g.add_edge(node[x], node[y])
    return nx.nx_pydot.to_pydot(g).to_string()

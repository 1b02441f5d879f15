"""
Pointwise finite dimensional persistence modules over finite posets.

A module is stored by its dimension vector and one matrix per cover of the
base poset; every other structure map is a composite of cover maps. Morphisms
store one matrix per element. Kernels, images and cokernels are computed
pointwise with the canonical bases of persenc.algebra, and the induced cover
maps are solved for, so a non-natural input surfaces as NoSolution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from persenc.algebra.exactlinalg import (
    Matrix,
    block_diagonal,
    cokernel_projection,
    column_span_basis,
    hstack,
    kernel_basis,
    rank,
    solve_in_span,
    vstack,
)
from persenc.config import DEFAULT_FIELD_CHAR
from persenc.errors import (
    DimensionMismatch,
    FieldMismatch,
    NotCommutative,
    NotInterval,
    NotNatural,
)
from persenc.order.poset import (
    Element,
    FinitePoset,
    MonotoneMap,
    downset_of,
    is_downset,
    is_interval,
    sub_poset,
    upset_of,
)

logger = logging.getLogger(__name__)

Cover = Tuple[Element, Element]


def same_base(P: FinitePoset, Q: FinitePoset) -> bool:
    """Same elements in the same order with the same relation; index-keyed data is then shared."""
    return P is Q or (P.elements == Q.elements and bool(np.array_equal(P.leq, Q.leq)))


@dataclass(frozen=True, eq=False)
class PfdModule:
    base: FinitePoset
    dims: Tuple[int, ...]
    # keyed by index pairs (i, j) of covers base.elements[i] < base.elements[j]
    covers: Mapping[Tuple[int, int], Matrix] = field(repr=False)
    p: int = DEFAULT_FIELD_CHAR

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != len(self.base) or any(d < 0 for d in dims):
            raise DimensionMismatch(
                f"Need one nonnegative dimension per element, got {len(dims)} for {len(self.base)}"
            )
        object.__setattr__(self, "dims", dims)
        maps: Dict[Tuple[int, int], Matrix] = {}
        for x, y in self.base.covers:
            i, j = self.base.index(x), self.base.index(y)
            m = self.covers.get((i, j))
            if m is None:
                if dims[i] and dims[j]:
                    raise DimensionMismatch(f"Missing cover map {x!r} -> {y!r}", {"cover": [repr(x), repr(y)]})
                m = Matrix.zeros(dims[j], dims[i], self.p)
            if m.p != self.p:
                raise FieldMismatch(f"Cover map {x!r} -> {y!r} is over F_{m.p}, module over F_{self.p}")
            if m.shape != (dims[j], dims[i]):
                raise DimensionMismatch(
                    f"Cover map {x!r} -> {y!r} has shape {m.shape}, expected {(dims[j], dims[i])}",
                    {"cover": [repr(x), repr(y)], "shape": list(m.shape)},
                )
            maps[(i, j)] = m
        object.__setattr__(self, "covers", maps)
        object.__setattr__(self, "_from", {})

    @classmethod
    def from_elements(
        cls,
        base: FinitePoset,
        dims: Mapping[Element, int],
        cover_maps: Mapping[Cover, Matrix],
        p: int = DEFAULT_FIELD_CHAR,
    ) -> "PfdModule":
        d = tuple(int(dims.get(x, 0)) for x in base.elements)
        maps = {(base.index(x), base.index(y)): m for (x, y), m in cover_maps.items()}
        return cls(base, d, maps, p)

    @classmethod
    def zero(cls, base: FinitePoset, p: int = DEFAULT_FIELD_CHAR) -> "PfdModule":
        return cls(base, (0,) * len(base), {}, p)

    def dim(self, x: Element) -> int:
        return self.dims[self.base.index(x)]

    def cover_map(self, x: Element, y: Element) -> Matrix:
        return self.covers[(self.base.index(x), self.base.index(y))]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def is_zero(self) -> bool:
        return not any(self.dims)

    def maps_from(self, i: int) -> Dict[int, Matrix]:
        """Structure maps M(x_i <= y) for every y above x_i, keyed by index."""
        cache = self._from  # type: ignore[attr-defined]
        if i not in cache:
            cache[i] = _propagate(self, i, check=False)
        return cache[i]

    def __repr__(self) -> str:
        return f"PfdModule({len(self.base)} elements, total dim {self.total_dim}, p={self.p})"


def _in_covers(P: FinitePoset) -> Dict[int, List[int]]:
    out: Dict[int, List[int]] = {i: [] for i in range(len(P))}
    for x, y in P.covers:
        out[P.index(y)].append(P.index(x))
    return out


def _topological_indices(P: FinitePoset) -> List[int]:
    return P.indices(P.topological_order)


def _propagate(M: PfdModule, i: int, check: bool) -> Dict[int, Matrix]:
    P = M.base
    up = P.leq[i]
    incoming = _in_covers(P)
    out: Dict[int, Matrix] = {i: Matrix.identity(M.dims[i], M.p)}
    for y in _topological_indices(P):
        if y == i or not up[y]:
            continue
        composites = [(x, M.covers[(x, y)] @ out[x]) for x in incoming[y] if up[x]]
        x0, first = composites[0]
        if check:
            for x1, other in composites[1:]:
                if other != first:
                    px, qy = P.elements[i], P.elements[y]
                    raise NotCommutative(
                        f"Composites {px!r} -> {qy!r} through {P.elements[x0]!r} and {P.elements[x1]!r} differ",
                        {
                            "from": repr(px),
                            "to": repr(qy),
                            "via": [repr(P.elements[x0]), repr(P.elements[x1])],
                            "composites": [first.tolist(), other.tolist()],
                        },
                    )
        out[y] = first
    return out


def validate_module(M: PfdModule) -> PfdModule:
    """Propagates from every element over its upset; two paths to the same element must agree."""
    for i in range(len(M.base)):
        M._from[i] = _propagate(M, i, check=True)  # type: ignore[attr-defined]
    return M


def structure_map(M: PfdModule, x: Element, y: Element) -> Matrix:
    i, j = M.base.index(x), M.base.index(y)
    if not M.base.leq[i, j]:
        raise ValueError(f"{x!r} is not <= {y!r}")
    return M.maps_from(i)[j]


@dataclass(frozen=True, eq=False)
class Morphism:
    source: PfdModule
    target: PfdModule
    # one matrix per base element, in base order
    components: Tuple[Matrix, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if not same_base(self.source.base, self.target.base):
            raise DimensionMismatch("Morphism source and target live over different posets")
        if self.source.p != self.target.p:
            raise FieldMismatch("Morphism source and target use different fields")
        comps = tuple(self.components)
        if len(comps) != len(self.source.base):
            raise DimensionMismatch(f"Need {len(self.source.base)} components, got {len(comps)}")
        for k, (c, m, n) in enumerate(zip(comps, self.source.dims, self.target.dims)):
            if c.shape != (n, m):
                raise DimensionMismatch(
                    f"Component at {self.source.base.elements[k]!r} has shape {c.shape}, expected {(n, m)}",
                    {"element": repr(self.source.base.elements[k]), "shape": list(c.shape)},
                )
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_elements(
        cls, source: PfdModule, target: PfdModule, components: Mapping[Element, Matrix]
    ) -> "Morphism":
        comps = []
        for i, x in enumerate(source.base.elements):
            c = components.get(x)
            comps.append(c if c is not None else Matrix.zeros(target.dims[i], source.dims[i], source.p))
        return cls(source, target, tuple(comps))

    @property
    def base(self) -> FinitePoset:
        return self.source.base

    def at(self, x: Element) -> Matrix:
        return self.components[self.base.index(x)]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)


def validate_morphism(phi: Morphism) -> Morphism:
    M, N = phi.source, phi.target
    for (i, j), m in M.covers.items():
        lhs = N.covers[(i, j)] @ phi.components[i]
        rhs = phi.components[j] @ m
        if lhs != rhs:
            x, y = M.base.elements[i], M.base.elements[j]
            raise NotNatural(
                f"Naturality fails on cover {x!r} -> {y!r}",
                {"cover": [repr(x), repr(y)], "left": lhs.tolist(), "right": rhs.tolist()},
            )
    return phi


def identity_morphism(M: PfdModule) -> Morphism:
    return Morphism(M, M, tuple(Matrix.identity(d, M.p) for d in M.dims))


def zero_morphism(M: PfdModule, N: PfdModule) -> Morphism:
    return Morphism(M, N, tuple(Matrix.zeros(n, m, M.p) for m, n in zip(M.dims, N.dims)))


def compose(psi: Morphism, phi: Morphism) -> Morphism:
    """psi after phi."""
    if phi.target is not psi.source and phi.target.dims != psi.source.dims:
        raise DimensionMismatch("compose: target of phi is not the source of psi")
    return Morphism(phi.source, psi.target, tuple(b @ a for a, b in zip(phi.components, psi.components)))


def linear_combination(coefficients: Sequence[int], morphisms: Sequence[Morphism]) -> Morphism:
    if len(coefficients) != len(morphisms) or not morphisms:
        raise DimensionMismatch("Need one coefficient per morphism")
    first = morphisms[0]
    comps = [Matrix.zeros(c.rows, c.cols, c.p) for c in first.components]
    for a, phi in zip(coefficients, morphisms):
        comps = [acc + c.scale(a) for acc, c in zip(comps, phi.components)]
    return Morphism(first.source, first.target, tuple(comps))


def interval_module(P: FinitePoset, interval: Iterable[Element], p: int = DEFAULT_FIELD_CHAR) -> PfdModule:
    """F on the interval, 0 elsewhere, identities inside."""
    interval = list(interval)
    if not is_interval(P, interval):
        raise NotInterval("Subset is not an interval of the poset", {"subset": [repr(x) for x in interval]})
    m = P.mask(interval)
    dims = tuple(int(b) for b in m)
    maps = {}
    for x, y in P.covers:
        i, j = P.index(x), P.index(y)
        maps[(i, j)] = Matrix.identity(1, p) if m[i] and m[j] else Matrix.zeros(dims[j], dims[i], p)
    return PfdModule(P, dims, maps, p)


def upset_module(P: FinitePoset, x: Element, p: int = DEFAULT_FIELD_CHAR) -> PfdModule:
    """The projective F[up(x)]."""
    return interval_module(P, upset_of(P, [x]), p)


def direct_sum(*modules: PfdModule) -> PfdModule:
    if not modules:
        raise ValueError("direct_sum needs at least one module")
    P, p = modules[0].base, modules[0].p
    for M in modules[1:]:
        if not same_base(M.base, P):
            raise DimensionMismatch("direct_sum: modules live over different posets")
        if M.p != p:
            raise FieldMismatch("direct_sum: modules use different fields")
    dims = tuple(sum(M.dims[k] for M in modules) for k in range(len(P)))
    maps = {key: block_diagonal(*(M.covers[key] for M in modules), p=p) for key in modules[0].covers}
    return PfdModule(P, dims, maps, p)


def direct_sum_morphism(*morphisms: Morphism) -> Morphism:
    src = direct_sum(*(f.source for f in morphisms))
    tgt = direct_sum(*(f.target for f in morphisms))
    comps = tuple(
        block_diagonal(*(f.components[k] for f in morphisms), p=src.p) for k in range(len(src.base))
    )
    return Morphism(src, tgt, comps)


def upset_morphism(
    P: FinitePoset,
    sources: Sequence[Element],
    targets: Sequence[Element],
    coefficients: np.ndarray,
    p: int = DEFAULT_FIELD_CHAR,
) -> Morphism:
    """
    The map sum_j F[up(sources_j)] -> sum_i F[up(targets_i)] with generator matrix
    `coefficients` (targets x sources). Entry (i, j) is used only when targets_i <= sources_j.
    """
    coefficients = np.asarray(coefficients, dtype=np.int64).reshape(len(targets), len(sources))
    allowed = np.array([[P.le(t, s) for s in sources] for t in targets], dtype=bool).reshape(coefficients.shape)
    coefficients = np.where(allowed, coefficients, 0)
    src = direct_sum(*(upset_module(P, s, p) for s in sources)) if sources else PfdModule.zero(P, p)
    tgt = direct_sum(*(upset_module(P, t, p) for t in targets)) if targets else PfdModule.zero(P, p)
    comps = []
    for z in P.elements:
        rows = [i for i, t in enumerate(targets) if P.le(t, z)]
        cols = [j for j, s in enumerate(sources) if P.le(s, z)]
        comps.append(Matrix(coefficients[np.ix_(rows, cols)], p, shape=(len(rows), len(cols))))
    return Morphism(src, tgt, tuple(comps))


def restrict_module(M: PfdModule, subset: Iterable[Element]) -> PfdModule:
    """Restriction to the induced sub-poset; cover maps become structure-map composites."""
    Q = sub_poset(M.base, subset)
    dims = tuple(M.dim(x) for x in Q.elements)
    maps = {(Q.index(x), Q.index(y)): structure_map(M, x, y) for x, y in Q.covers}
    return PfdModule(Q, dims, maps, M.p)


def pullback(f: MonotoneMap, M: PfdModule) -> PfdModule:
    """Precomposition with f: the cover x < y maps by M(f(x) <= f(y))."""
    if f.target != M.base:
        raise DimensionMismatch("pullback: module does not live over the target of the map")
    a = f.indices
    perm = [M.base.index(q) for q in f.target.elements]
    a = np.array([perm[k] for k in a], dtype=np.int64).reshape(len(f.source))
    dims = tuple(M.dims[k] for k in a)
    maps = {}
    for x, y in f.source.covers:
        i, j = f.source.index(x), f.source.index(y)
        maps[(i, j)] = M.maps_from(int(a[i]))[int(a[j])]
    return PfdModule(f.source, dims, maps, M.p)


def pullback_morphism(f: MonotoneMap, phi: Morphism) -> Morphism:
    src, tgt = pullback(f, phi.source), pullback(f, phi.target)
    return Morphism(src, tgt, tuple(phi.at(f.assignment[x]) for x in f.source.elements))


def _vec_index(M: PfdModule, N: PfdModule) -> Tuple[List[int], int]:
    offsets, total = [], 0
    for m, n in zip(M.dims, N.dims):
        offsets.append(total)
        total += m * n
    return offsets, total


def hom_space(M: PfdModule, N: PfdModule) -> Tuple[int, List[Morphism]]:
    """
    Natural transformations M -> N as the null space of the naturality constraints.

    phi_x is vectorized row-major, so vec(A phi B) = (A kron B^T) vec(phi); the
    cover x < y contributes N_xy phi_x - phi_y M_xy = 0.
    """
    if not same_base(M.base, N.base):
        raise DimensionMismatch("hom_space: modules live over different posets")
    p = M.p
    offsets, total = _vec_index(M, N)
    blocks = []
    for (i, j), mxy in M.covers.items():
        nxy = N.covers[(i, j)]
        rows = N.dims[j] * M.dims[i]
        if rows == 0:
            continue
        c = np.zeros((rows, total), dtype=np.int64)
        left = nxy.kron(Matrix.identity(M.dims[i], p))
        right = Matrix.identity(N.dims[j], p).kron(mxy.T)
        c[:, offsets[i] : offsets[i] + N.dims[i] * M.dims[i]] += left.array
        c[:, offsets[j] : offsets[j] + N.dims[j] * M.dims[j]] -= right.array
        blocks.append(Matrix(c, p, shape=c.shape))
    constraints = vstack(*blocks) if blocks else Matrix.zeros(0, total, p)
    basis = kernel_basis(constraints)
    out = []
    for k in range(basis.cols):
        v = basis.array[:, k]
        comps = tuple(
            Matrix(v[o : o + n * m], p, shape=(n, m)) for o, m, n in zip(offsets, M.dims, N.dims)
        )
        out.append(Morphism(M, N, comps))
    logger.debug("hom_space: %d unknowns, dimension %d", total, len(out))
    return len(out), out


def kernel(phi: Morphism) -> Tuple[PfdModule, Morphism]:
    """Kernel with its inclusion into the source."""
    M = phi.source
    K = [kernel_basis(c) for c in phi.components]
    maps = {(i, j): solve_in_span(K[j], m @ K[i]) for (i, j), m in M.covers.items()}
    ker = PfdModule(M.base, tuple(k.cols for k in K), maps, M.p)
    return ker, Morphism(ker, M, tuple(K))


def image(phi: Morphism) -> Tuple[PfdModule, Morphism]:
    """Image with its inclusion into the target."""
    N = phi.target
    B = [column_span_basis(c) for c in phi.components]
    maps = {(i, j): solve_in_span(B[j], n @ B[i]) for (i, j), n in N.covers.items()}
    im = PfdModule(N.base, tuple(b.cols for b in B), maps, N.p)
    return im, Morphism(im, N, tuple(B))


def cokernel(phi: Morphism) -> Tuple[PfdModule, Morphism]:
    """Cokernel with its projection from the target."""
    N = phi.target
    Q = [cokernel_projection(c) for c in phi.components]
    # X Q_i = Q_j N_ij, solved transposed since Q_i has full row rank
    maps = {(i, j): solve_in_span(Q[i].T, (Q[j] @ n).T).T for (i, j), n in N.covers.items()}
    cok = PfdModule(N.base, tuple(q.rows for q in Q), maps, N.p)
    return cok, Morphism(N, cok, tuple(Q))


OPERATIONS = {"kernel": kernel, "image": image, "cokernel": cokernel}


@dataclass(frozen=True)
class Colimit:
    dimension: int
    # offset of each generator block in the direct sum, keyed by source index
    offsets: Mapping[int, int]
    generators: int
    relations: Matrix
    quotient: Matrix


def colimit_over_downset(e: MonotoneMap, M: PfdModule, downset: Iterable[Element]) -> Colimit:
    """
    Colimit of the pullback of M restricted to a downset D of the source,
    presented as the direct sum over D modulo v - M(e(q) <= e(q')) v for covers q < q' in D.
    """
    P = e.source
    D = list(downset)
    if not is_downset(P, D):
        raise ValueError("colimit_over_downset: subset is not a downset")
    a = e.indices
    perm = [M.base.index(q) for q in e.target.elements]
    img = [perm[k] for k in a]
    members = [P.index(x) for x in D]
    offsets, total = {}, 0
    for i in sorted(members):
        offsets[i] = total
        total += M.dims[img[i]]
    cols = []
    for x, y in P.covers:
        i, j = P.index(x), P.index(y)
        if i not in offsets or j not in offsets:
            continue
        d = M.dims[img[i]]
        if d == 0:
            continue
        block = np.zeros((total, d), dtype=np.int64)
        block[offsets[i] : offsets[i] + d] = np.eye(d, dtype=np.int64)
        t = M.maps_from(img[i])[img[j]]
        block[offsets[j] : offsets[j] + t.rows] -= t.array
        cols.append(Matrix(block, M.p, shape=block.shape))
    relations = hstack(*cols) if cols else Matrix.zeros(total, 0, M.p)
    dim = total - rank(relations)
    return Colimit(dim, offsets, total, relations, cokernel_projection(relations))


class CounitRow(BaseModel):
    element: str
    colimit_dim: int
    target_dim: int
    rank: int
    injective: bool
    surjective: bool
    iso: bool


class CounitReport(BaseModel):
    rows: List[CounitRow]
    ok: bool

    def failures(self) -> List[CounitRow]:
        return [r for r in self.rows if not r.iso]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.rows])


def counit_check(e: MonotoneMap, M: PfdModule) -> CounitReport:
    """
    For each q' of the target, compares the colimit of e*M over e^-1(down q')
    with M_q' through the canonical map assembled from structure maps.
    """
    P, T = e.source, e.target
    rows = []
    for q in T.elements:
        qi = M.base.index(q)
        D = e.preimage(downset_of(T, [q]))
        col = colimit_over_downset(e, M, D)
        blocks = []
        for i in sorted(col.offsets):
            src = M.base.index(e.assignment[P.elements[i]])
            blocks.append(M.maps_from(src)[qi])
        E = hstack(*blocks) if blocks else Matrix.zeros(M.dims[qi], 0, M.p)
        if not (E @ col.relations).is_zero():
            raise NotCommutative(f"Canonical map at {q!r} does not kill the colimit relations", {"element": repr(q)})
        r = rank(E)
        rows.append(
            CounitRow(
                element=str(q),
                colimit_dim=col.dimension,
                target_dim=M.dims[qi],
                rank=r,
                injective=r == col.dimension,
                surjective=r == M.dims[qi],
                iso=r == col.dimension == M.dims[qi],
            )
        )
    return CounitReport(rows=rows, ok=all(r.iso for r in rows))


def module_table(M: PfdModule) -> pd.DataFrame:
    return pd.DataFrame({"element": [str(x) for x in M.base.elements], "dim": list(M.dims)})

"""
Coxeter group catalog: linear-form families, basic invariants, subspace charts
Author: Saito SDK developers
Copyright 2024

Every group acts on an ambient R^N and is restricted to a subspace V cut out
by linear constraints. V is parametrized by the ambient coordinates that are
not eliminated (the chart); the eliminated ones are solved from the
constraints, which keeps integer coefficients for the catalog entries.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from saito_sdk.errors import InconsistencyError, UnknownGroupError
from saito_sdk.exactla import RatMatrix, rank_profile, rref
from saito_sdk.polycore import Poly, Ring, WeightSystem, accumulate_linear_power, poly_substitute
from saito_sdk.utils import MPQ, ONE, ZERO, toRational

_log = logging.getLogger(__name__)

Vector = Tuple[MPQ, ...]


def _vec(values) -> Vector:
    return tuple(toRational(v) for v in values)


def _unit(n: int, i: int) -> Vector:
    return tuple(ONE if k == i else ZERO for k in range(n))


def _dot(a: Sequence, b: Sequence) -> MPQ:
    return sum((x * y for x, y in zip(a, b)), ZERO)


@dataclass(frozen=True)
class FormFamily:
    """A set of ambient linear forms, each entering the invariant sums with `weight`."""

    name: str
    forms: Tuple[Vector, ...]
    weight: MPQ = ONE
    up_to_sign: bool = False


@dataclass(frozen=True)
class CartanMetric:
    G: RatMatrix
    G_inv: RatMatrix
    scale: MPQ

    def contravariant(self) -> RatMatrix:
        """sigma * G^{-1}: the metric pairing of differentials."""
        return RatMatrix(self.G_inv.rows, self.G_inv.cols, tuple(self.scale * v for v in self.G_inv.entries))


@dataclass(frozen=True)
class GroupSpec:
    name: str
    ambient_dim: int
    constraints: Tuple[Vector, ...]
    eliminated: Tuple[int, ...]
    reflection_generators: Tuple[Vector, ...]
    form_families: Tuple[FormFamily, ...]
    weights: WeightSystem
    quad_normalizer: MPQ
    generator_prefix: str
    even_only: bool = False
    # prefactor of the top flat coordinate; None derives it from the self-dual coordinate
    top_prefactor: Optional[MPQ] = None
    # derived in __post_init__
    chart_indices: Tuple[int, ...] = field(init=False, repr=False, compare=False)
    embedding: RatMatrix = field(init=False, repr=False, compare=False)
    chart_ring: Ring = field(init=False, repr=False, compare=False)
    generator_ring: Ring = field(init=False, repr=False, compare=False)
    flat_ring: Ring = field(init=False, repr=False, compare=False)
    chart_reflections: Tuple[RatMatrix, ...] = field(init=False, repr=False, compare=False)
    chart_forms: Tuple[Tuple[Tuple[Vector, ...], MPQ], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        N = self.ambient_dim
        free = tuple(i for i in range(N) if i not in self.eliminated)
        object.__setattr__(self, "chart_indices", free)
        n = len(free)
        if n != len(self.weights.weights):
            raise InconsistencyError(
                "{}: rank {} from the constraints but {} invariant degrees".format(self.name, n, len(self.weights.weights))
            )
        object.__setattr__(self, "embedding", _chart_embedding(N, self.constraints, self.eliminated, free))
        object.__setattr__(self, "chart_ring", Ring(tuple("x{}".format(i + 1) for i in free)))
        object.__setattr__(self, "generator_ring", self.weights.ring(self.generator_prefix))
        object.__setattr__(self, "flat_ring", self.weights.ring("t"))
        normals = tuple(_project_onto(self.constraints, _vec(v)) for v in self.reflection_generators)
        object.__setattr__(self, "reflection_generators", normals)
        object.__setattr__(self, "chart_reflections", tuple(self._chart_reflection(v) for v in normals))
        object.__setattr__(
            self,
            "chart_forms",
            tuple((tuple(self.chart_form(f) for f in fam.forms), fam.weight) for fam in self.form_families),
        )
        if not form_family_closed(self):
            raise InconsistencyError("{}: a form family is not stable under the generators".format(self.name))

    @property
    def rank(self) -> int:
        return len(self.chart_indices)

    @property
    def coxeter_number(self) -> int:
        return self.weights.coxeter_number

    @property
    def degrees(self) -> Tuple[int, ...]:
        return self.weights.weights

    def chart_form(self, ambient_form: Sequence) -> Vector:
        """Coefficients of an ambient linear form pulled back to chart coordinates."""
        E = self.embedding
        return tuple(_dot(ambient_form, E.col(j)) for j in range(E.cols))

    def lift(self, point: Sequence) -> Vector:
        """Ambient point of V for chart coordinates."""
        return tuple(self.embedding @ list(point))

    def _chart_reflection(self, normal: Vector) -> RatMatrix:
        nn = _dot(normal, normal)
        if nn == 0:
            raise InconsistencyError("{}: reflection normal vanishes on V".format(self.name))
        E = self.embedding
        rows = []
        # ambient reflection applied to each chart basis vector, read back through the chart
        images = []
        for j in range(E.cols):
            v = E.col(j)
            c = 2 * _dot(normal, v) / nn
            images.append([a - c * b for a, b in zip(v, normal)])
        for v in images:
            for con in self.constraints:
                if _dot(con, v) != 0:
                    raise InconsistencyError("{}: a generator does not preserve V".format(self.name))
        for amb in self.chart_indices:
            rows.append([images[j][amb] for j in range(E.cols)])
        R = RatMatrix.from_rows(rows)
        if R @ R != RatMatrix.identity(R.rows):
            raise InconsistencyError("{}: chart reflection is not an involution".format(self.name))
        return R

    def random_point(self, rng: random.Random, low: int = -9, high: int = 9) -> Tuple[MPQ, ...]:
        return tuple(MPQ(rng.randint(low, high)) for _ in range(self.rank))


def _project_onto(constraints: Sequence[Vector], v: Vector) -> Vector:
    """Orthogonal projection of v onto the common kernel of the constraints."""
    if not constraints:
        return v
    k = len(constraints)
    gram = [[_dot(a, b) for b in constraints] for a in constraints]
    rhs = [_dot(c, v) for c in constraints]
    reduced, pivots = rref([gram[i] + [rhs[i]] for i in range(k)], ncols=k)
    coeffs = [reduced[i][k] for i in range(k)]
    out = list(v)
    for c, con in zip(coeffs, constraints):
        out = [a - c * b for a, b in zip(out, con)]
    return tuple(out)


def _chart_embedding(N, constraints, eliminated, free) -> RatMatrix:
    """N x n matrix E with x = E y for the chart coordinates y."""
    k = len(constraints)
    if len(eliminated) != k:
        raise InconsistencyError("One eliminated coordinate per constraint is required")
    # constraints restricted to the eliminated columns must be invertible
    rows = []
    for con in constraints:
        rows.append([con[e] for e in eliminated] + [-con[f] for f in free])
    reduced, pivots = rref(rows, ncols=k)
    if pivots != list(range(k)):
        raise InconsistencyError("Eliminated coordinates are not solvable from the constraints")
    n = len(free)
    E = [[ZERO] * n for _ in range(N)]
    for j, f in enumerate(free):
        E[f][j] = ONE
    for r, e in enumerate(eliminated):
        for j in range(n):
            E[e][j] = reduced[r][k + j]
    return RatMatrix.from_rows(E)


#####  Catalog  #####


def _e6() -> GroupSpec:
    N = 8
    half, sixth, third = MPQ(1, 2), MPQ(1, 6), MPQ(1, 3)
    S6 = tuple(ONE if i < 6 else ZERO for i in range(N))
    spinor = []
    for sign in (1, -1):
        for i in range(6):
            f = [sixth * S6[k] for k in range(N)]
            f[6] += sign * half
            f[7] -= sign * half
            f[i] -= ONE
            spinor.append(tuple(f))
    pairs = []
    for i, j in combinations(range(6), 2):
        f = [-third * S6[k] for k in range(N)]
        f[i] += ONE
        f[j] += ONE
        pairs.append(tuple(f))
    gens = [_vec(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(5)]
    gens.append(_vec((1, 1, 1, -1, -1, -1, 1, -1)))
    return GroupSpec(
        name="E6",
        ambient_dim=N,
        constraints=(S6, _vec((0, 0, 0, 0, 0, 0, 1, 1))),
        eliminated=(5, 7),
        reflection_generators=tuple(gens),
        form_families=(FormFamily("minuscule", tuple(spinor + pairs)),),
        weights=WeightSystem((2, 5, 6, 8, 9, 12)),
        quad_normalizer=MPQ(1, 12),
        generator_prefix="u",
    )


def _e7() -> GroupSpec:
    N = 8
    quarter = MPQ(1, 4)
    forms = []
    for i, j in combinations(range(N), 2):
        for sign in (1, -1):
            f = [-quarter] * N
            f[i] += sign
            f[j] += sign
            forms.append(_vec(f))
    gens = [_vec(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(6)]
    gens.append(_vec((1, 1, 1, 1, -1, -1, -1, -1)))
    return GroupSpec(
        name="E7",
        ambient_dim=N,
        constraints=(_vec([1] * N),),
        eliminated=(7,),
        reflection_generators=tuple(gens),
        form_families=(FormFamily("pairs", tuple(forms), MPQ(1, 2)),),
        weights=WeightSystem((2, 6, 8, 10, 12, 14, 18)),
        quad_normalizer=MPQ(1, 60),
        generator_prefix="v",
    )


def _e8() -> GroupSpec:
    N = 9
    third = MPQ(1, 3)
    diffs = []
    for i, j in combinations(range(N), 2):
        f = [ZERO] * N
        f[i], f[j] = ONE, -ONE
        diffs.append(tuple(f))
    triples = []
    for i, j, k in combinations(range(N), 3):
        f = [third] * N
        for idx in (i, j, k):
            f[idx] -= ONE
        triples.append(tuple(f))
    gens = [_vec(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(7)]
    gens.append(_vec((2, 2, 2, -1, -1, -1, -1, -1, -1)))
    return GroupSpec(
        name="E8",
        ambient_dim=N,
        constraints=(_vec([1] * N),),
        eliminated=(8,),
        reflection_generators=tuple(gens),
        form_families=(FormFamily("roots", tuple(diffs + triples), up_to_sign=True),),
        weights=WeightSystem((2, 8, 12, 14, 18, 20, 24, 30)),
        quad_normalizer=MPQ(1, 60),
        generator_prefix="w",
        even_only=True,
        top_prefactor=MPQ(96, 61),
    )


def _a(n: int) -> GroupSpec:
    N = n + 1
    gens = [_vec(_unit(N, i)[k] - _unit(N, i + 1)[k] for k in range(N)) for i in range(n)]
    return GroupSpec(
        name="A{}".format(n),
        ambient_dim=N,
        constraints=(_vec([1] * N),),
        eliminated=(N - 1,),
        reflection_generators=tuple(gens),
        form_families=(FormFamily("coordinates", tuple(_unit(N, i) for i in range(N))),),
        weights=WeightSystem(tuple(range(2, N + 1))),
        quad_normalizer=MPQ(1, 2),
        generator_prefix="p",
    )


CATALOG = {
    "E6": _e6,
    "E7": _e7,
    "E8": _e8,
    "A2": lambda: _a(2),
    "A3": lambda: _a(3),
}


def group_spec(name: str) -> GroupSpec:
    """
    Catalog lookup; rank, chart and generator closure are checked on construction.

    Params
    --
    - name [str] one of E6, E7, E8, A2, A3
    """
    key = str(name).strip().upper()
    if key not in CATALOG:
        raise UnknownGroupError("Unknown group {!r}; known groups: {}".format(name, ", ".join(sorted(CATALOG))))
    return _build(key)


@lru_cache(maxsize=None)
def _build(key: str) -> GroupSpec:
    g = CATALOG[key]()
    _log.debug("Built %s: chart %s, degrees %s", g.name, g.chart_ring.names, g.degrees)
    return g


#####  Invariants  #####


def form_family_closed(g: GroupSpec) -> bool:
    """True iff every form family is permuted (up to sign where allowed) by every generator."""

    def canon(v, up_to_sign):
        if up_to_sign:
            lead = next((x for x in v if x != 0), ZERO)
            if lead < 0:
                return tuple(-x for x in v)
        return tuple(v)

    for R in g.chart_reflections:
        for fam in g.form_families:
            forms = [g.chart_form(f) for f in fam.forms]
            before = sorted(canon(f, fam.up_to_sign) for f in forms)
            moved = [tuple(_dot(f, R.col(j)) for j in range(R.cols)) for f in forms]
            after = sorted(canon(f, fam.up_to_sign) for f in moved)
            if before != after:
                _log.debug("%s: family %s not closed", g.name, fam.name)
                return False
    return True


def _degree_factor(g: GroupSpec, m: int) -> MPQ:
    return g.quad_normalizer if m == 2 else ONE


def build_basic_invariant(g: GroupSpec, m: int) -> Poly:
    """
    Degree m power sum of the linear forms, restricted to the chart; m = 2 carries the
    catalog's normalizer.
    """
    if m < 1:
        raise ValueError("Invariant degree must be positive, got {}".format(m))
    if g.even_only and m % 2:
        raise ValueError("{} invariants exist in even degree only, got {}".format(g.name, m))
    return _basic_invariant(g.name, m)


@lru_cache(maxsize=None)
def _basic_invariant(name: str, m: int) -> Poly:
    g = group_spec(name)
    terms: Dict = {}
    factor = _degree_factor(g, m)
    for forms, weight in g.chart_forms:
        for f in forms:
            accumulate_linear_power(terms, f, m, weight * factor)
    return Poly(g.chart_ring, terms, homogeneous=m)


def basic_invariants(g: GroupSpec) -> List[Poly]:
    return [build_basic_invariant(g, d) for d in g.degrees]


def check_invariance(g: GroupSpec, p: Poly) -> bool:
    """True iff p(R y) = p(y) exactly for every generating reflection R."""
    ring = g.chart_ring
    if p.ring != ring:
        raise ValueError("Polynomial must live in the chart ring {}".format(ring))
    for R in g.chart_reflections:
        images = [Poly(ring, {tuple(1 if k == j else 0 for k in range(R.cols)): R[i, j] for j in range(R.cols)})
                  for i in range(R.rows)]
        if poly_substitute(p, images) != p:
            return False
    return True


def cartan_metric(g: GroupSpec, scale=2) -> CartanMetric:
    """
    G read off the normalized quadratic invariant (p_2 = 1/2 y^T G y), checked
    positive definite and inverted exactly.

    Params
    --
    - g [GroupSpec] group
    - scale [rational] convention factor sigma of the contravariant metric
    """
    p2 = build_basic_invariant(g, 2)
    n = g.rank
    rows = []
    for i in range(n):
        di = p2.diff(i)
        rows.append([di.diff(j).constant_value() for j in range(n)])
    G = RatMatrix.from_rows(rows)
    if not G.is_symmetric() or any(m <= 0 for m in G.leading_minors()):
        raise InconsistencyError("{}: quadratic invariant is degenerate in this chart".format(g.name))
    return CartanMetric(G, G.inverse(), toRational(scale))


#####  Fast numeric path  #####


class InvariantEvaluator:
    """
    Exact values and chart gradients of all basic invariants at a point,
    straight from the linear forms (no symbolic expansion).
    """

    def __init__(self, g: GroupSpec):
        self.group = g
        self._degrees = g.degrees
        self._top = max(self._degrees)
        self._families = []
        for forms, weight in g.chart_forms:
            integral = all(c.denominator == 1 for f in forms for c in f)
            vecs = [tuple(int(c) for c in f) if integral else f for f in forms]
            self._families.append((vecs, weight))
        self._factors = [_degree_factor(g, d) for d in self._degrees]

    def evaluate(self, point: Sequence, gradients: bool = True):
        """
        Returns
        --
        (values, grads): values[a] = p_{d_a}(point); grads[a][j] = d p_{d_a} / d y_j
        (grads is None when gradients=False)
        """
        y = [toRational(v) for v in point]
        if all(v.denominator == 1 for v in y):
            y = [int(v) for v in y]
        n = len(y)
        values = [ZERO] * len(self._degrees)
        grads = [[ZERO] * n for _ in self._degrees] if gradients else None
        for vecs, weight in self._families:
            fam_vals = [0] * len(self._degrees)
            fam_grads = [[0] * n for _ in self._degrees] if gradients else None
            for f in vecs:
                v = sum(a * b for a, b in zip(f, y))
                pw = [1]
                for _ in range(self._top):
                    pw.append(pw[-1] * v)
                for a, d in enumerate(self._degrees):
                    fam_vals[a] += pw[d]
                    if gradients:
                        s = d * pw[d - 1]
                        if s:
                            row = fam_grads[a]
                            for j, c in enumerate(f):
                                if c:
                                    row[j] += s * c
            for a in range(len(self._degrees)):
                w = weight * self._factors[a]
                values[a] += w * fam_vals[a]
                if gradients:
                    grads[a] = [x + w * gv for x, gv in zip(grads[a], fam_grads[a])]
        values = [toRational(v) for v in values]
        if gradients:
            grads = [[toRational(v) for v in row] for row in grads]
        return values, grads


def jacobian_rank(g: GroupSpec, point: Sequence) -> int:
    """Rank of (d p_{d_a} / d y_j) at a chart point."""
    _, grads = InvariantEvaluator(g).evaluate(point)
    rank, _ = rank_profile(RatMatrix.from_rows(grads))
    return rank

"""
The metric pipeline: contravariant pairings of the basic invariants, their
rewriting in the generators by evaluation and interpolation, and the Saito
metric eta = d g / d p_h.
Author: Saito SDK developers
Copyright 2024
"""
from __future__ import annotations

import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from saito_sdk.errors import InconsistencyError, RankDeficiencyError
from saito_sdk.exactla import INCONSISTENT, UNIQUE, RatMatrix, solve_exact, solve_modular
from saito_sdk.groups import CartanMetric, GroupSpec, InvariantEvaluator, build_basic_invariant, cartan_metric
from saito_sdk.polycore import Poly, Ring, enumerate_weighted_monomials, poly_substitute
from saito_sdk.utils import MPQ, ONE, ZERO, toRational

_log = logging.getLogger(__name__)

DEFAULT_SEED = 20240611
SURPLUS_ROWS = 5
FRESH_CHECKS = 3
# extension rounds before a rank deficiency is declared a basis bug
EXTENSION_ROUNDS = 6
RANDOM_RANGE = 9


def poly_det(matrix: Sequence[Sequence[Poly]], ring: Ring) -> Poly:
    """Determinant of a small polynomial matrix by memoized Laplace expansion."""
    n = len(matrix)
    memo: Dict[Tuple[int, int], Poly] = {}

    def minor(row, used):
        if row == n:
            return ring.one()
        key = (row, used)
        if key in memo:
            return memo[key]
        total = ring.zero()
        sign = 1
        for col in range(n):
            if used & (1 << col):
                continue
            entry = matrix[row][col]
            if not entry.is_zero():
                sub = minor(row + 1, used | (1 << col))
                if not sub.is_zero():
                    term = entry * sub
                    total = total + term if sign > 0 else total - term
            sign = -sign
        memo[key] = total
        return total

    return minor(0, 0)


@dataclass(frozen=True)
class MetricTable:
    """Symmetric matrix of polynomials: g^{ab} (kind 'g') or eta^{ab} (kind 'eta')."""

    group: GroupSpec
    kind: str
    entries: Tuple[Tuple[Poly, ...], ...]
    ring: Ring

    def __post_init__(self):
        n = self.group.rank
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise InconsistencyError("Metric table must be {0}x{0}".format(n))
        d, h = self.group.degrees, self.group.coxeter_number
        for a in range(n):
            for b in range(n):
                p = self.entries[a][b]
                if p != self.entries[b][a]:
                    raise InconsistencyError("Metric table is not symmetric at ({}, {})".format(d[a], d[b]))
                target = d[a] + d[b] - 2 - (h if self.kind == "eta" else 0)
                if target < 0 and not p.is_zero():
                    raise InconsistencyError("{} entry ({}, {}) must vanish".format(self.kind, d[a], d[b]))
                if not p.is_homogeneous(target):
                    raise InconsistencyError(
                        "{} entry ({}, {}) is not homogeneous of degree {}".format(self.kind, d[a], d[b], target)
                    )

    @property
    def size(self) -> int:
        return len(self.entries)

    def entry(self, a: int, b: int) -> Poly:
        return self.entries[a][b]

    def by_degrees(self, da: int, db: int) -> Poly:
        d = self.group.degrees
        return self.entries[d.index(da)][d.index(db)]

    def det(self) -> Poly:
        return poly_det(self.entries, self.ring)

    def pairs(self):
        """(a, b, entry) for a <= b."""
        n = self.size
        for a in range(n):
            for b in range(a, n):
                yield a, b, self.entries[a][b]


@dataclass(frozen=True)
class SampleGrid:
    points: Tuple[Tuple[MPQ, ...], ...]
    provenance: Tuple[str, ...]
    seed: int

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise InconsistencyError("Sample points must be pairwise distinct")


#####  Pairings  #####


def pairing_degree(g: GroupSpec, a: int, b: int) -> int:
    return g.degrees[a] + g.degrees[b] - 2


def pairing_raw(g: GroupSpec, a: int, b: int, metric: Optional[CartanMetric] = None) -> Poly:
    """
    sum_ij d p_a/d y_i * sigma G^{ij} * d p_b/d y_j as a chart polynomial.
    Symbolic: only practical for the small groups and low degrees.
    """
    metric = metric or cartan_metric(g)
    C = metric.contravariant()
    n = g.rank
    pa = build_basic_invariant(g, g.degrees[a])
    pb = pa if a == b else build_basic_invariant(g, g.degrees[b])
    grad_a = [pa.diff(i) for i in range(n)]
    grad_b = grad_a if a == b else [pb.diff(j) for j in range(n)]
    total = g.chart_ring.zero()
    for j in range(n):
        v = g.chart_ring.zero()
        for i in range(n):
            if C[i, j] != 0:
                v = v + grad_a[i] * C[i, j]
        if not v.is_zero():
            total = total + v * grad_b[j]
    return Poly(g.chart_ring, dict(total.items()), homogeneous=pairing_degree(g, a, b))


class PointCache:
    """Shared invariant values and gradients per chart point."""

    def __init__(self, g: GroupSpec):
        self._evaluator = InvariantEvaluator(g)
        self._cache: Dict[Tuple, Tuple] = {}
        self._lock = threading.Lock()

    def get(self, point: Tuple) -> Tuple[List[MPQ], List[List[MPQ]]]:
        with self._lock:
            hit = self._cache.get(point)
        if hit is None:
            hit = self._evaluator.evaluate(point)
            with self._lock:
                self._cache[point] = hit
        return hit

    def values(self, point: Tuple) -> List[MPQ]:
        return self.get(point)[0]


class PairingEvaluator:
    """Numeric stand-in for pairing_raw: evaluates the pairing at chart points through the forms."""

    def __init__(self, g: GroupSpec, a: int, b: int, metric: CartanMetric, cache: Optional[PointCache] = None):
        self.group = g
        self.a, self.b = a, b
        self.degree = pairing_degree(g, a, b)
        self._C = metric.contravariant()
        self._cache = cache or PointCache(g)

    def evaluate(self, point: Sequence) -> MPQ:
        pt = tuple(toRational(v) for v in point)
        _, grads = self._cache.get(pt)
        ga, gb = grads[self.a], grads[self.b]
        n = len(ga)
        C = self._C
        total = ZERO
        for i in range(n):
            if ga[i] == 0:
                continue
            row = ZERO
            for j in range(n):
                c = C[i, j]
                if c != 0 and gb[j] != 0:
                    row += c * gb[j]
            total += ga[i] * row
        return total


#####  Sampling and interpolation  #####


def lattice_grid(g: GroupSpec) -> List[Tuple[MPQ, ...]]:
    """Nondecreasing integer tuples 1 <= y_1 <= ... <= y_n <= n-2 in chart coordinates."""
    n = g.rank
    return [tuple(MPQ(v) for v in pt) for pt in combinations_with_replacement(range(1, n - 1), n)]


def _random_points(g: GroupSpec, rng: random.Random, count: int, taken: set, rational: bool = False):
    out = []
    while len(out) < count:
        if rational:
            pt = tuple(MPQ(rng.randint(-RANDOM_RANGE * 4, RANDOM_RANGE * 4), rng.randint(1, 7)) for _ in range(g.rank))
        else:
            pt = tuple(MPQ(rng.randint(-RANDOM_RANGE, RANDOM_RANGE)) for _ in range(g.rank))
        if pt in taken or not any(pt):
            continue
        taken.add(pt)
        out.append(pt)
    return out


def make_grid(g: GroupSpec, needed: int, seed: int = DEFAULT_SEED, extension: int = 0) -> SampleGrid:
    """
    needed + 5 + extension sample points: the small integer lattice first (in a seeded
    order), then deterministic pseudo-random small-integer points. Larger
    `extension` values return a superset with the same prefix.

    Params
    --
    - g [GroupSpec] group
    - needed [int] number of unknowns of the system to be sampled
    - seed [int] grid seed, recorded in the manifest
    - extension [int] additional points on top of the surplus rows
    """
    if needed < 1:
        raise ValueError("needed must be positive")
    total = needed + SURPLUS_ROWS + extension
    base = lattice_grid(g)
    random.Random("{}:{}:order".format(g.name, seed)).shuffle(base)
    points = base[:total]
    provenance = ["lattice-grid"] * len(points)
    if len(points) < total:
        taken = set(base)
        rng = random.Random("{}:{}:extension".format(g.name, seed))
        extra = _random_points(g, rng, total - len(points), taken)
        points += extra
        provenance += ["random-extension"] * len(extra)
    return SampleGrid(tuple(points), tuple(provenance), seed)


def _fresh_points(g: GroupSpec, seed: int, count: int):
    rng = random.Random("{}:{}:fresh".format(g.name, seed))
    return _random_points(g, rng, count, set(), rational=True)


def _monomial_values(basis: Sequence[Tuple[int, ...]], values: Sequence[MPQ]) -> List[MPQ]:
    n = len(values)
    tops = [max((e[i] for e in basis), default=0) for i in range(n)]
    table = []
    for v, top in zip(values, tops):
        row = [ONE]
        for _ in range(top):
            row.append(row[-1] * v)
        table.append(row)
    out = []
    for exps in basis:
        t = ONE
        for i, e in enumerate(exps):
            if e:
                t = t * table[i][e]
        out.append(t)
    return out


def rewrite_in_invariants(
    g: GroupSpec,
    q,
    degree: int,
    solver: str = "modular",
    seed: int = DEFAULT_SEED,
    cache: Optional[PointCache] = None,
    threads: int = 1,
) -> Poly:
    """
    Expresses a W-invariant chart polynomial in the generators by sampling and
    solving for the coefficients of all generator monomials of the degree.

    Params
    --
    - g [GroupSpec] group
    - q [Poly|PairingEvaluator] anything with evaluate(point)
    - degree [int] weighted degree of q
    - solver [str] "modular" (default) or "exact"
    - seed [int] grid seed
    - cache [PointCache] shared invariant evaluations

    Returns
    --
    [Poly] polynomial in the generator ring
    """
    ring = g.generator_ring
    basis = enumerate_weighted_monomials(g.weights, degree)
    cache = cache or PointCache(g)
    if not basis:
        for pt in _fresh_points(g, seed, FRESH_CHECKS):
            if q.evaluate(pt) != 0:
                raise InconsistencyError("No generator monomial of degree {} but q does not vanish".format(degree))
        return ring.zero()
    k = len(basis)
    extension = 0
    for _ in range(EXTENSION_ROUNDS):
        grid = make_grid(g, k, seed, extension)
        rows, rhs = [], []
        for pt in grid.points:
            rows.append(_monomial_values(basis, cache.values(pt)))
            rhs.append(q.evaluate(pt))
        A = RatMatrix.from_rows(rows)
        if solver == "exact":
            report = solve_exact(A, rhs)
        else:
            report = solve_modular(A, rhs, threads=threads)
        if report.status == UNIQUE:
            break
        if report.status == INCONSISTENT:
            raise InconsistencyError(
                "Surplus residual while rewriting a degree {} polynomial: not in the generator ring".format(degree)
            )
        _log.debug("Rank %d < %d for degree %d; extending the grid", report.rank, k, degree)
        extension += max(k, 8)
    else:
        raise RankDeficiencyError("Interpolation matrix for degree {} stayed rank deficient".format(degree))
    result = Poly(ring, dict(zip(basis, report.solution)))
    for pt in _fresh_points(g, seed, FRESH_CHECKS):
        if result.evaluate(cache.values(pt)) != q.evaluate(pt):
            raise InconsistencyError("Rewritten polynomial fails back-substitution at {}".format(pt))
    return result


def rewrite_symbolic(g: GroupSpec, q: Poly, degree: int) -> Poly:
    """
    Brute-force rewriting by coefficient matching of fully expanded
    polynomials. Independent of sampling; small groups only.
    """
    ring = g.generator_ring
    basis = enumerate_weighted_monomials(g.weights, degree)
    if not basis:
        if not q.is_zero():
            raise InconsistencyError("q is nonzero but no generator monomial has degree {}".format(degree))
        return ring.zero()
    invariants = [build_basic_invariant(g, d) for d in g.degrees]
    expanded = [poly_substitute(g.generator_ring.monomial(e), invariants) for e in basis]
    monomials = set(e for e, _ in q.items())
    for p in expanded:
        monomials.update(e for e, _ in p.items())
    order = sorted(monomials)
    A = RatMatrix.from_rows([[p.coefficient(m) for p in expanded] for m in order])
    b = [q.coefficient(m) for m in order]
    report = solve_exact(A, b)
    if report.status != UNIQUE:
        raise InconsistencyError("Symbolic rewriting is {} for degree {}".format(report.status, degree))
    return Poly(ring, dict(zip(basis, report.solution)))


#####  Tables  #####


def metric_table(
    g: GroupSpec,
    scale=2,
    solver: str = "modular",
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    symbolic: bool = False,
) -> MetricTable:
    """
    All n(n+1)/2 pairings g^{ab} rewritten in the generators.

    Params
    --
    - scale [rational] convention factor sigma
    - symbolic [bool] expand pairings and rewrite by coefficient matching (small groups)
    """
    metric = cartan_metric(g, scale)
    n = g.rank
    cache = PointCache(g)
    pairs = [(a, b) for a in range(n) for b in range(a, n)]

    def task(pair):
        a, b = pair
        if symbolic:
            entry = rewrite_symbolic(g, pairing_raw(g, a, b, metric), pairing_degree(g, a, b))
        else:
            ev = PairingEvaluator(g, a, b, metric, cache)
            entry = rewrite_in_invariants(g, ev, ev.degree, solver=solver, seed=seed, cache=cache)
        _log.debug("%s g(%d,%d) has %d terms", g.name, g.degrees[a], g.degrees[b], len(entry))
        return entry

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, pairs))
    else:
        results = [task(p) for p in pairs]
    table = [[None] * n for _ in range(n)]
    for (a, b), entry in zip(pairs, results):
        table[a][b] = table[b][a] = entry
    return MetricTable(g, "g", tuple(tuple(r) for r in table), g.generator_ring)


def eta_table(gt: MetricTable) -> MetricTable:
    """eta^{ab} = d g^{ab} / d p_h, the derivative in the top generator."""
    if gt.kind != "g":
        raise ValueError("eta is extracted from a table of kind 'g'")
    top = gt.ring.nvars - 1
    entries = tuple(tuple(p.diff(top) for p in row) for row in gt.entries)
    return MetricTable(gt.group, "eta", entries, gt.ring)

"""
Saito flat coordinates: graded ansatz, transformation of eta, solving for
the free coefficients and the equal-antidiagonal normalization
Author: Saito SDK developers
Copyright 2024
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import sympy
from sympy.ntheory.factor_ import core

from saito_sdk.errors import InconsistencyError
from saito_sdk.exactla import RatMatrix, rref
from saito_sdk.groups import GroupSpec
from saito_sdk.polycore import Poly, Ring, enumerate_weighted_monomials
from saito_sdk.saito import MetricTable
from saito_sdk.utils import MPQ, ONE, ZERO, rationalSqrt, toRational

_log = logging.getLogger(__name__)

Exponents = Tuple[int, ...]


@dataclass(frozen=True)
class AnsatzUnknown:
    name: str
    coordinate: int
    monomial: Exponents


@dataclass(frozen=True)
class AnsatzSystem:
    """
    Candidate coordinates t_a = p_a + sum k_i m_i in a combined ring
    (unknowns first, weight 0, then the generators) and the coefficient
    equations of every off-antidiagonal entry of eta in those coordinates.
    """

    group: GroupSpec
    ring: Ring
    unknown_ring: Ring
    unknowns: Tuple[AnsatzUnknown, ...]
    coords: Tuple[Poly, ...]
    equations: Tuple[Poly, ...]
    sources: Tuple[Tuple[int, int, Exponents], ...]

    def __post_init__(self):
        seen = set()
        for eq in self.equations:
            seen.update(eq.variables_used())
        missing = [u.name for i, u in enumerate(self.unknowns) if i not in seen]
        if missing:
            raise InconsistencyError("Unknowns {} appear in no equation".format(", ".join(missing)))

    def unknowns_of(self, coordinate: int) -> List[AnsatzUnknown]:
        return [u for u in self.unknowns if u.coordinate == coordinate]

    def specialize(self, values: Dict[int, MPQ]) -> Tuple[Poly, ...]:
        """Candidate coordinates with the unknowns fixed, as generator polynomials."""
        N = self.unknown_ring.nvars
        target = self.group.generator_ring
        out = []
        for a, t in enumerate(self.coords):
            fixed = t.specialize(values) if values else t
            terms = {}
            for exps, c in fixed.items():
                if any(exps[:N]):
                    raise InconsistencyError("Unknown left unsolved in a flat coordinate")
                terms[exps[N:]] = c
            out.append(Poly(target, terms, homogeneous=self.group.degrees[a]))
        return tuple(out)


@dataclass(frozen=True)
class FlatFrame:
    """Flat coordinates t_a in the generators; eta_const is L_e g for e = d/dt_h, constant and antidiagonal."""

    group: GroupSpec
    coords: Tuple[Poly, ...]
    jacobian: Tuple[Tuple[Poly, ...], ...]
    eta_const: RatMatrix
    scale_factors: Tuple[MPQ, ...]
    unknowns: Tuple[Tuple[str, MPQ], ...] = ()

    def __post_init__(self):
        g = self.group
        n = g.rank
        for a, t in enumerate(self.coords):
            if not t.is_homogeneous(g.degrees[a]):
                raise InconsistencyError("t_{} is not homogeneous".format(g.degrees[a]))
            lead = t.coefficient(_unit(n, a))
            if lead == 0:
                raise InconsistencyError("t_{} does not contain its generator".format(g.degrees[a]))
        c0 = self.eta_const[0, n - 1]
        for a in range(n):
            for b in range(n):
                v = self.eta_const[a, b]
                dual = g.degrees[a] + g.degrees[b] == g.coxeter_number + 2
                if (dual and v != c0) or (not dual and v != 0):
                    raise InconsistencyError("eta in flat coordinates is not antidiagonal with equal entries")

    @property
    def antidiagonal(self) -> MPQ:
        return self.eta_const[0, self.group.rank - 1]

    def bracket(self, a: int) -> Poly:
        """t_a divided by its leading coefficient (the monic polynomial in p)."""
        return self.coords[a] / self.scale_factors[a]

    def inverse_images(self) -> List[Poly]:
        """
        The generators as polynomials in the flat coordinates, by
        degree-ascending back-substitution through the triangular change.
        """
        g = self.group
        fring = g.flat_ring
        n = g.rank
        images: List[Poly] = []
        for a in range(n):
            s = self.scale_factors[a]
            rest = self.coords[a] / s - g.generator_ring.gen(a)
            # rest only involves p_b with d_b < d_a; the placeholders are never raised to a power
            subs = images + [fring.gen(b) for b in range(a, n)]
            images.append(fring.gen(a) / s - rest.substitute(subs))
        return images

    def to_flat(self, p: Poly) -> Poly:
        return p.substitute(self.inverse_images())


def _unit(n: int, i: int) -> Exponents:
    return tuple(1 if k == i else 0 for k in range(n))


#####  Transformation law  #####


def eta_in_new_coords(coords: Sequence[Poly], eta: MetricTable, threads: int = 1) -> Tuple[Tuple[Poly, ...], ...]:
    """
    eta'^{ab} = sum_{lm} dt_a/dp_l * eta^{lm} * dt_b/dp_m

    Params
    --
    - coords [list of Poly] candidate coordinates; their ring is the generator
      ring or contains the generator names (with extra unknowns)
    - eta [MetricTable] Saito metric in the generators
    - threads [int] entries computed concurrently

    Returns
    --
    [tuple] symmetric matrix of Poly in the ring of the coordinates
    """
    n = eta.size
    if len(coords) != n:
        raise ValueError("Expected {} coordinates, got {}".format(n, len(coords)))
    ring = coords[0].ring
    if ring == eta.ring:
        positions = list(range(n))
        E = eta.entries
    else:
        positions = [ring.index(name) for name in eta.ring.names]
        E = tuple(tuple(p.embed(ring, positions) for p in row) for row in eta.entries)
    J = [[t.diff(positions[b]) for b in range(n)] for t in coords]
    # w[b][l] = sum_m eta^{lm} J[b][m]
    W = []
    for b in range(n):
        row = []
        for lam in range(n):
            acc = ring.zero()
            for mu in range(n):
                if not E[lam][mu].is_zero() and not J[b][mu].is_zero():
                    acc = acc + E[lam][mu] * J[b][mu]
            row.append(acc)
        W.append(row)

    def entry(pair):
        a, b = pair
        acc = ring.zero()
        for lam in range(n):
            if not J[a][lam].is_zero() and not W[b][lam].is_zero():
                acc = acc + J[a][lam] * W[b][lam]
        return acc

    pairs = [(a, b) for a in range(n) for b in range(a, n)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(entry, pairs))
    else:
        values = [entry(p) for p in pairs]
    out = [[None] * n for _ in range(n)]
    for (a, b), v in zip(pairs, values):
        out[a][b] = out[b][a] = v
    return tuple(tuple(r) for r in out)


#####  Ansatz  #####


def flat_ansatz(g: GroupSpec, eta: MetricTable, threads: int = 1) -> AnsatzSystem:
    """
    t_2 = p_2 and t_a = p_a + sum_i k_i m_i over every other generator
    monomial m_i of degree d_a. The unknowns are numbered k1, k2, ... by
    ascending coordinate, then canonical monomial order.
    """
    n = g.rank
    gring = g.generator_ring
    unknowns: List[AnsatzUnknown] = []
    for a in range(1, n):
        for exps in enumerate_weighted_monomials(g.weights, g.degrees[a]):
            if exps == _unit(n, a):
                continue
            unknowns.append(AnsatzUnknown("k{}".format(len(unknowns) + 1), a, exps))
    N = len(unknowns)
    uring = Ring(tuple(u.name for u in unknowns), (0,) * N)
    ring = Ring(uring.names + gring.names, (0,) * N + g.degrees)
    coords = []
    for a in range(n):
        terms = {(0,) * N + _unit(n, a): ONE}
        for i, u in enumerate(unknowns):
            if u.coordinate == a:
                terms[_unit(N, i) + u.monomial] = ONE
        coords.append(Poly(ring, terms))
    _log.debug("%s ansatz: %d unknowns", g.name, N)

    eta_new = eta_in_new_coords(coords, eta, threads)
    h = g.coxeter_number
    equations, sources = [], []
    for a in range(n):
        for b in range(a, n):
            if g.degrees[a] + g.degrees[b] <= h + 2:
                # lower entries vanish by grading, antidiagonal ones are constants of eta
                continue
            grouped: Dict[Exponents, Dict[Exponents, MPQ]] = {}
            for exps, c in eta_new[a][b].items():
                grouped.setdefault(exps[N:], {})[exps[:N]] = c
            for pexps in sorted(grouped, key=gring.sort_key, reverse=True):
                eq = Poly(uring, grouped[pexps])
                if not eq.is_zero():
                    equations.append(eq)
                    sources.append((a, b, pexps))
    return AnsatzSystem(g, ring, uring, tuple(unknowns), tuple(coords), tuple(equations), tuple(sources))


#####  Solving  #####


def _linear_step(equations: Sequence[Poly], unknown: Sequence[int]) -> Dict[int, MPQ]:
    """Unknowns uniquely determined by the equations of degree <= 1."""
    cols = {v: j for j, v in enumerate(unknown)}
    m = len(unknown)
    rows = []
    for eq in equations:
        if eq.degree() > 1:
            continue
        row = [ZERO] * (m + 1)
        for exps, c in eq.items():
            if any(exps):
                row[cols[exps.index(1)]] += c
            else:
                row[m] -= c
        rows.append(row)
    if not rows:
        return {}
    R, pivots = rref(rows, m)
    for r in R[len(pivots):]:
        if r[m] != 0:
            raise InconsistencyError("Flat coordinate system is inconsistent")
    pivot_set = set(pivots)
    fixed = {}
    for r, c in enumerate(pivots):
        if all(R[r][j] == 0 for j in range(m) if j not in pivot_set):
            fixed[unknown[c]] = R[r][m]
    return fixed


def _to_sympy(p: Poly, symbols):
    expr = sympy.Integer(0)
    for exps, c in p.items():
        term = sympy.Rational(int(c.numerator), int(c.denominator))
        for s, e in zip(symbols, exps):
            if e:
                term *= s ** e
        expr += term
    return expr


def _sympy_fallback(system: AnsatzSystem, equations: Sequence[Poly], unknown: Sequence[int]) -> Dict[int, MPQ]:
    symbols = sympy.symbols(system.unknown_ring.names)
    exprs = [_to_sympy(eq, symbols) for eq in equations]
    wanted = [symbols[i] for i in unknown]
    solutions = sympy.solve(exprs, wanted, dict=True)
    rational = []
    for sol in solutions:
        if all(s in sol and sol[s].is_Rational for s in wanted):
            rational.append({i: toRational(str(sol[symbols[i]])) for i in unknown})
    if len(rational) != 1:
        raise InconsistencyError(
            "Polynomial fallback found {} rational solutions for {} unknowns".format(len(rational), len(unknown))
        )
    return rational[0]


def solve_unknowns(system: AnsatzSystem) -> Dict[int, MPQ]:
    """
    Fixes the unknowns by repeated linear peeling: substitute what is known,
    solve the equations of degree <= 1 exactly and keep the uniquely
    determined values. A stuck remainder goes to sympy.
    """
    known: Dict[int, MPQ] = {}
    pending = list(system.equations)
    total = system.unknown_ring.nvars
    rounds = 0
    while len(known) < total:
        rounds += 1
        pending = [eq.specialize(known) if known else eq for eq in pending]
        pending = [eq for eq in pending if not eq.is_zero()]
        for eq in pending:
            if eq.is_constant():
                raise InconsistencyError("Flat coordinate equation reduces to {} = 0".format(eq.constant_value()))
        unknown = [i for i in range(total) if i not in known]
        fixed = _linear_step(pending, unknown)
        if not fixed:
            _log.warning(
                "%s: linear peeling stuck with %d unknowns left; solving the remainder with sympy",
                system.group.name,
                len(unknown),
            )
            fixed = _sympy_fallback(system, pending, unknown)
        _log.debug("Round %d fixed %s", rounds, ", ".join(system.unknowns[i].name for i in sorted(fixed)))
        known.update(fixed)
    for eq in system.equations:
        if not eq.specialize(known).is_zero():
            raise InconsistencyError("Nonzero residual in the flat coordinate system")
    return known


def _squarefree_core(q: MPQ) -> MPQ:
    """q divided by the largest rational square dividing it; q > 0."""
    q = toRational(q)
    return MPQ(core(int(q.numerator)), core(int(q.denominator)))


def _top_prefactor(g: GroupSpec, eta_new) -> MPQ:
    """
    The catalog's prefactor of t_h when it has one. Otherwise the self-dual
    coordinate, if any, decides: t_h takes the squarefree factor that turns
    its prefactor into a rational number.
    """
    if g.top_prefactor is not None:
        return g.top_prefactor
    n = g.rank
    c0 = eta_new[0][n - 1].constant_value()
    top = ONE
    for a in range(n):
        if g.weights.dual(a) == a:
            ratio = c0 / eta_new[a][a].constant_value()
            if ratio <= 0:
                raise InconsistencyError("Self-dual coordinate t_{} has a non-positive eta entry".format(g.degrees[a]))
            top = ONE / _squarefree_core(ratio)
    return top


def _scale_factors(g: GroupSpec, eta_new) -> Tuple[MPQ, ...]:
    """
    Rescaling that makes every antidiagonal entry of eta' equal: t_h takes
    the top prefactor, the lower member of a dual pair keeps scale 1, the
    higher one absorbs the ratio and a self-dual coordinate takes the
    positive square root.
    """
    n = g.rank
    target = _top_prefactor(g, eta_new) * eta_new[0][n - 1].constant_value()
    scales = [ONE] * n
    for a in range(n):
        b = g.weights.dual(a)
        c = eta_new[a][b].constant_value()
        if c == 0:
            raise InconsistencyError("Antidiagonal entry ({}, {}) vanishes".format(g.degrees[a], g.degrees[b]))
        if a == b:
            s = rationalSqrt(target / c)
            if s is None:
                raise InconsistencyError(
                    "Self-dual coordinate t_{} needs the square root of {}".format(g.degrees[a], target / c)
                )
            scales[a] = s
        elif a > b:
            scales[a] = target / c
            if scales[a] < 0:
                _log.warning("Negative normalization factor %s for t_%d", scales[a], g.degrees[a])
    return tuple(scales)


def _eta_in_frame(
    g: GroupSpec, eta: MetricTable, coords: Sequence[Poly], scales: Sequence[MPQ], threads: int = 1
) -> RatMatrix:
    """
    The Saito metric of the frame, L_e g with e = d/dt_h. The table is taken
    along d/dp_h, which is the top prefactor times e.
    """
    eta_t = eta_in_new_coords(coords, eta, threads)
    n = g.rank
    top = scales[n - 1]
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            if not eta_t[a][b].is_constant():
                raise InconsistencyError(
                    "eta'({}, {}) is not constant in the solved frame".format(g.degrees[a], g.degrees[b])
                )
            row.append(eta_t[a][b].constant_value() / top)
        rows.append(row)
    return RatMatrix.from_rows(rows)


def solve_flat(g: GroupSpec, eta: MetricTable, threads: int = 1) -> FlatFrame:
    """
    Flat coordinates with eta'(t) constant and antidiagonal, t_2 = p_2 and
    all antidiagonal entries equal.

    Params
    --
    - g [GroupSpec] group
    - eta [MetricTable] Saito metric eta^{ab}(p)
    - threads [int] concurrency of the eta transformation

    Returns
    --
    [FlatFrame] solved and normalized frame
    """
    if eta.kind != "eta":
        raise ValueError("solve_flat needs a table of kind 'eta'")
    system = flat_ansatz(g, eta, threads)
    values = solve_unknowns(system)
    brackets = system.specialize(values)
    eta_b = eta_in_new_coords(brackets, eta, threads)
    scales = _scale_factors(g, eta_b)
    coords = tuple(t * s for t, s in zip(brackets, scales))
    n = g.rank
    jacobian = tuple(tuple(t.diff(b) for b in range(n)) for t in coords)
    solved = tuple((system.unknowns[i].name, values[i]) for i in sorted(values))
    frame = FlatFrame(g, coords, jacobian, _eta_in_frame(g, eta, coords, scales, threads), scales, solved)
    _log.info("%s flat frame solved: %d unknowns, antidiagonal %s", g.name, len(solved), frame.antidiagonal)
    return frame


def frame_from_brackets(g: GroupSpec, eta: MetricTable, brackets: Sequence[Poly]) -> FlatFrame:
    """Rebuilds a frame from stored monic coordinates (cache reload)."""
    eta_b = eta_in_new_coords(brackets, eta)
    scales = _scale_factors(g, eta_b)
    coords = tuple(t * s for t, s in zip(brackets, scales))
    n = g.rank
    jacobian = tuple(tuple(t.diff(b) for b in range(n)) for t in coords)
    return FlatFrame(g, coords, jacobian, _eta_in_frame(g, eta, coords, scales), scales)

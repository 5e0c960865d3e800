"""
Frobenius potential: intersection form in flat coordinates, Hessian of F,
integration and the verification suite (eta constancy, Euler, WDVV)
Author: Saito SDK developers
Copyright 2024
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from saito_sdk.errors import IntegrabilityError, InconsistencyError
from saito_sdk.exactla import RatMatrix
from saito_sdk.flatsolve import FlatFrame, eta_in_new_coords
from saito_sdk.groups import GroupSpec
from saito_sdk.polycore import Poly, WeightSystem, enumerate_weighted_monomials
from saito_sdk.saito import MetricTable
from saito_sdk.utils import MPQ, ONE, ZERO, toRational

_log = logging.getLogger(__name__)

WDVV_TRIALS = 50
SYMBOLIC_WDVV_MAX_RANK = 6


@dataclass(frozen=True)
class Potential:
    """F(t) with the grading data needed to read off the Frobenius structure."""

    group: GroupSpec
    F: Poly
    weights: WeightSystem
    unity_index: int
    metric_scale: MPQ = MPQ(2)
    # eta_const (upper indices, from the frame) times eta_F (lower, from F) = eta_factor * I
    eta_factor: Optional[MPQ] = None

    def __post_init__(self):
        if self.F.ring != self.group.flat_ring:
            raise ValueError("F must live in the flat ring {}".format(self.group.flat_ring))
        top = 2 * self.weights.coxeter_number + 2
        if not self.F.is_homogeneous(top):
            raise InconsistencyError("F is not weighted homogeneous of degree {}".format(top))

    @property
    def rank(self) -> int:
        return self.weights.rank

    def third(self, a: int, b: int, c: int) -> Poly:
        return self.F.diff(a).diff(b).diff(c)

    def eta_lower(self) -> RatMatrix:
        """eta_{ab} = d^3 F / dt_h dt_a dt_b; ValueError if an entry is not constant."""
        e = self.unity_index
        Fe = self.F.diff(e)
        n = self.rank
        rows = []
        for a in range(n):
            Fea = Fe.diff(a)
            rows.append([Fea.diff(b).constant_value() for b in range(n)])
        return RatMatrix.from_rows(rows)


@dataclass(frozen=True)
class StructureConstants:
    """c[a][b][g] = c^g_{ab} = eta^{gd} F_{dab}."""

    c: Tuple[Tuple[Tuple[Poly, ...], ...], ...]

    def __post_init__(self):
        n = len(self.c)
        for a in range(n):
            for b in range(a):
                if self.c[a][b] != self.c[b][a]:
                    raise InconsistencyError("Structure constants are not symmetric in ({}, {})".format(a, b))


@dataclass
class VerificationReport:
    name: str
    passed: bool
    message: str = ""
    details: Optional[Dict[str, str]] = None

    def format(self) -> str:
        if self.passed:
            return "PASS {}".format(self.name) + (": {}".format(self.message) if self.message else "")
        return "FAIL {}: {}".format(self.name, self.message)


def format_reports(reports: Sequence[VerificationReport]) -> str:
    return "\n".join(r.format() for r in reports)


#####  Intersection form and Hessian  #####


def g_in_flat(g: GroupSpec, frame: FlatFrame, gt: MetricTable) -> MetricTable:
    """
    g^{ab}(t) = <dt_a, dt_b>*: the intersection form pushed through the frame
    Jacobian, then written in the flat variables.
    """
    if gt.kind != "g":
        raise ValueError("g_in_flat needs a table of kind 'g'")
    pushed = eta_in_new_coords(frame.coords, gt)
    images = frame.inverse_images()
    entries = tuple(tuple(p.substitute(images) for p in row) for row in pushed)
    return MetricTable(g, "g", entries, g.flat_ring)


def _antidiagonal(g: GroupSpec, eta_const: RatMatrix) -> MPQ:
    n = g.rank
    c0 = eta_const[0, n - 1]
    for a in range(n):
        if eta_const[a, g.weights.dual(a)] != c0:
            raise ValueError("eta_const antidiagonal entries are not all equal")
    if c0 == 0:
        raise ValueError("eta_const is singular")
    return c0


def hessian_from_g(gft: MetricTable, eta_const: RatMatrix) -> Tuple[Tuple[Poly, ...], ...]:
    """
    F_{lm} = g^{l*m*}(t) / ((d_l* + d_m* - 2) * c0), where l* is the
    antidiagonal dual of l and c0 the common antidiagonal value of eta.

    Returns
    --
    [tuple] symmetric matrix of Poly in the flat variables
    """
    g = gft.group
    ws = g.weights
    n = g.rank
    c0 = _antidiagonal(g, eta_const)
    H = [[None] * n for _ in range(n)]
    for lam in range(n):
        for mu in range(lam, n):
            ls, ms = ws.dual(lam), ws.dual(mu)
            factor = ONE / ((g.degrees[ls] + g.degrees[ms] - 2) * c0)
            H[lam][mu] = H[mu][lam] = gft.entry(ls, ms) * factor
    return tuple(tuple(r) for r in H)


def integrate_potential(
    hessian: Sequence[Sequence[Poly]],
    ws: WeightSystem,
    group: GroupSpec,
    metric_scale=2,
    eta_const: Optional[RatMatrix] = None,
) -> Potential:
    """
    The unique F of weighted degree 2h+2 with the given Hessian.

    Each coefficient of the ansatz is read off the first Hessian entry whose
    two variables divide its monomial; every Hessian entry of the result is
    then compared with the input, which is the integrability check.

    Params
    --
    - hessian [matrix of Poly] F_{lm} in the flat variables
    - ws [WeightSystem] degrees of the flat coordinates
    - group [GroupSpec] owner of the flat ring
    - metric_scale [rational] sigma the metric was computed with
    - eta_const [RatMatrix] the frame's eta, to record eta_factor

    Returns
    --
    [Potential]
    """
    n = ws.rank
    ring = group.flat_ring
    top = 2 * ws.coxeter_number + 2
    terms: Dict[Tuple[int, ...], MPQ] = {}
    for exps in enumerate_weighted_monomials(ws, top):
        for lam in range(n):
            if not exps[lam]:
                continue
            found = False
            for mu in range(lam, n):
                need = 2 if mu == lam else 1
                if exps[mu] < need:
                    continue
                rest = list(exps)
                rest[lam] -= 1
                rest[mu] -= 1
                coeff = hessian[lam][mu].coefficient(rest)
                mult = exps[lam] * (exps[lam] - 1) if mu == lam else exps[lam] * exps[mu]
                if coeff != 0:
                    terms[exps] = coeff / mult
                found = True
                break
            if found:
                break
    F = Poly(ring, terms, homogeneous=top)
    for lam in range(n):
        Fl = F.diff(lam)
        for mu in range(lam, n):
            if Fl.diff(mu) != hessian[lam][mu]:
                raise IntegrabilityError(
                    "Hessian entry ({}, {}) is not a second derivative of any potential".format(
                        ws.weights[lam], ws.weights[mu]
                    )
                )
    P = Potential(group, F, ws, n - 1, toRational(metric_scale))
    if eta_const is not None:
        P = Potential(group, F, ws, n - 1, toRational(metric_scale), eta_factor_of(P, eta_const))
    _log.info("%s potential: %d terms", group.name, len(F))
    return P


def eta_factor_of(P: Potential, eta_const: RatMatrix) -> MPQ:
    product = eta_const @ P.eta_lower()
    factor = product[0, 0]
    n = P.rank
    if product != RatMatrix.from_rows([[factor if i == j else ZERO for j in range(n)] for i in range(n)]):
        raise InconsistencyError("eta from F is not proportional to the frame's eta")
    return factor


#####  Verification  #####


def verify_eta_constant(P: Potential) -> VerificationReport:
    """d^3 F / dt_h dt_a dt_b constant, nonzero exactly on the antidiagonal, all equal."""
    name = "eta-constant"
    g = P.group
    try:
        eta = P.eta_lower()
    except ValueError:
        return VerificationReport(name, False, "some d^3F/dt_{}dt_a dt_b is not constant".format(g.coxeter_number))
    h = g.coxeter_number
    n = P.rank
    value = eta[0, n - 1]
    for a in range(n):
        for b in range(n):
            v = eta[a, b]
            da, db = g.degrees[a], g.degrees[b]
            if da + db == h + 2:
                if v == 0 or v != value:
                    return VerificationReport(name, False, "antidiagonal entry ({}, {}) is {}, expected {}".format(da, db, v, value))
            elif v != 0:
                return VerificationReport(name, False, "off-antidiagonal entry ({}, {}) is {}".format(da, db, v))
    return VerificationReport(name, True, "antidiagonal {}".format(value))


def verify_euler(P: Potential) -> VerificationReport:
    """sum_a d_a t_a dF/dt_a = (2h+2) F."""
    name = "euler"
    ring = P.F.ring
    lhs = ring.zero()
    for a, d in enumerate(P.weights.weights):
        lhs = lhs + ring.gen(a) * P.F.diff(a) * d
    rhs = P.F * (2 * P.weights.coxeter_number + 2)
    if lhs != rhs:
        diff = lhs - rhs
        exps, c = diff.leading_term()
        return VerificationReport(name, False, "defect {} at monomial {}".format(c, Poly(ring, {exps: 1})))
    return VerificationReport(name, True)


def _wdvv_points(n: int, trials: int, seed: int) -> List[Tuple[MPQ, ...]]:
    rng = random.Random("wdvv:{}".format(seed))
    points = []
    for _ in range(trials):
        pt = []
        for _ in range(n):
            scale = 10 ** rng.randint(0, 6)
            pt.append(MPQ(rng.randint(-scale, scale), rng.randint(1, 97)))
        points.append(tuple(pt))
    return points


def _third_derivatives(P: Potential) -> Dict[Tuple[int, int, int], Poly]:
    n = P.rank
    out = {}
    seconds = {}
    for a in range(n):
        Fa = P.F.diff(a)
        for b in range(a, n):
            seconds[(a, b)] = Fa.diff(b)
    for a, b, c in combinations_with_replacement(range(n), 3):
        out[(a, b, c)] = seconds[(a, b)].diff(c)
    return out


def _wdvv_tensor(F3, eta_up: RatMatrix, n: int, zero):
    """M[(a,b)][(c,d)] = sum_{lm} F_{abl} eta^{lm} F_{mcd}."""

    def f3(a, b, c):
        return F3[tuple(sorted((a, b, c)))]

    U = {}
    for a in range(n):
        for b in range(a, n):
            row = []
            for mu in range(n):
                acc = zero
                for lam in range(n):
                    e = eta_up[lam, mu]
                    if e != 0:
                        acc = acc + f3(a, b, lam) * e
                row.append(acc)
            U[(a, b)] = row

    memo = {}

    def M(a, b, c, d):
        key = (min(a, b), max(a, b), min(c, d), max(c, d))
        if key not in memo:
            u = U[key[:2]]
            acc = zero
            for mu in range(n):
                acc = acc + u[mu] * f3(mu, c, d)
            memo[key] = acc
        return memo[key]

    return M


def verify_wdvv(P: Potential, trials: int = WDVV_TRIALS, seed: int = 20240611, symbolic: bool = False) -> VerificationReport:
    """
    sum F_{abl} eta^{lm} F_{mcd} = sum F_{cbl} eta^{lm} F_{mad} for every
    quadruple, checked exactly at `trials` seeded rational points or, for
    rank <= 6 and symbolic=True, as polynomial identities.
    """
    name = "wdvv"
    n = P.rank
    if n < 3:
        return VerificationReport(name, True, "vacuous in {} variables".format(n))
    try:
        eta_up = P.eta_lower().inverse()
    except (ValueError, ZeroDivisionError):
        return VerificationReport(name, False, "eta from F is not a constant invertible matrix")
    F3 = _third_derivatives(P)
    quads = [(a, b, c, d) for a in range(n) for b in range(n) for c in range(a + 1, n) for d in range(n)]
    if symbolic and n > SYMBOLIC_WDVV_MAX_RANK:
        _log.warning("Symbolic WDVV is limited to rank %d; evaluating at points instead", SYMBOLIC_WDVV_MAX_RANK)
        symbolic = False
    if symbolic:
        M = _wdvv_tensor(F3, eta_up, n, P.F.ring.zero())
        for a, b, c, d in quads:
            if M(a, b, c, d) != M(c, b, a, d):
                return VerificationReport(name, False, "symbolic identity fails for ({}, {}, {}, {})".format(
                    *(P.weights.weights[i] for i in (a, b, c, d))))
        return VerificationReport(name, True, "symbolic, {} quadruples".format(len(quads)))
    for pt in _wdvv_points(n, trials, seed):
        values = {k: p.evaluate(pt) for k, p in F3.items()}
        M = _wdvv_tensor(values, eta_up, n, ZERO)
        for a, b, c, d in quads:
            if M(a, b, c, d) != M(c, b, a, d):
                return VerificationReport(
                    name,
                    False,
                    "quadruple ({}, {}, {}, {}) fails at t = ({})".format(
                        *(P.weights.weights[i] for i in (a, b, c, d)), ", ".join(str(v) for v in pt)
                    ),
                    {"point": ",".join(str(v) for v in pt)},
                )
    return VerificationReport(name, True, "{} points".format(trials))


#####  Frobenius algebra  #####


def structure_constants(P: Potential) -> StructureConstants:
    """c^g_{ab} = eta^{gd} F_{dab}, checked for symmetry and the unity identity."""
    n = P.rank
    eta_up = P.eta_lower().inverse()
    F3 = _third_derivatives(P)
    zero = P.F.ring.zero()
    c = []
    for a in range(n):
        row = []
        for b in range(n):
            col = []
            for gam in range(n):
                acc = zero
                for d in range(n):
                    e = eta_up[gam, d]
                    if e != 0:
                        acc = acc + F3[tuple(sorted((d, a, b)))] * e
                col.append(acc)
            row.append(tuple(col))
        c.append(tuple(row))
    sc = StructureConstants(tuple(c))
    e = P.unity_index
    for b in range(n):
        for gam in range(n):
            expected = ONE if b == gam else ZERO
            if sc.c[e][b][gam] != P.F.ring.const(expected):
                raise InconsistencyError("The top coordinate field is not the unity of the algebra")
    return sc


def intersection_form_check(P: Potential, gft: MetricTable, eta_const: RatMatrix) -> VerificationReport:
    """g^{ab}(t) = (d_a + d_b - 2) * c0 * F_{a*b*} with c0 the frame's antidiagonal, the inverse of hessian_from_g."""
    name = "intersection-form"
    ws = P.weights
    c0 = _antidiagonal(P.group, eta_const)
    n = P.rank
    for a in range(n):
        for b in range(a, n):
            a_, b_ = ws.dual(a), ws.dual(b)
            rebuilt = P.F.diff(a_).diff(b_) * ((ws.weights[a] + ws.weights[b] - 2) * c0)
            if rebuilt != gft.entry(a, b):
                return VerificationReport(name, False, "entry ({}, {}) differs".format(ws.weights[a], ws.weights[b]))
    return VerificationReport(name, True)

"""
Exact sparse multivariate polynomials over the rationals
Author: Saito SDK developers
Copyright 2024

A Poly is an immutable map from exponent tuples to rational coefficients,
living in a Ring (ordered variable names plus optional integer weights).

Term order: graded by weighted degree (total degree when the ring has no
weights), ties broken lexicographically with the LAST declared variable most
significant. Generator rings are declared in ascending degree, so the top
generator leads, e.g. u8*u2^2 sorts before u6^2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from saito_sdk.errors import DimensionMismatchError, RingMismatchError
from saito_sdk.utils import MPQ, ONE, ZERO, toRational

Exponents = Tuple[int, ...]

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ring:
    """Ordered variables with optional positive weights."""

    names: Tuple[str, ...]
    weights: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(set(self.names)) != len(self.names):
            raise ValueError("Duplicate variable names in ring: {}".format(self.names))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
            if len(self.weights) != len(self.names):
                raise DimensionMismatchError("One weight per variable is required")
            if any(w < 0 for w in self.weights):
                raise ValueError("Weights must be non-negative")

    @property
    def nvars(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError("Unknown variable {!r} in ring {}".format(name, self.names))

    def monomial_degree(self, exps: Exponents) -> int:
        if self.weights is None:
            return sum(exps)
        return sum(e * w for e, w in zip(exps, self.weights))

    def sort_key(self, exps: Exponents):
        return (self.monomial_degree(exps), exps[::-1])

    def zero(self) -> "Poly":
        return Poly._raw(self, {})

    def one(self) -> "Poly":
        return self.const(ONE)

    def const(self, value) -> "Poly":
        q = toRational(value)
        if q == 0:
            return self.zero()
        return Poly._raw(self, {(0,) * self.nvars: q})

    def gen(self, var) -> "Poly":
        i = self.index(var) if isinstance(var, str) else int(var)
        if not 0 <= i < self.nvars:
            raise IndexError("Variable index {} outside ring of {} variables".format(i, self.nvars))
        exps = [0] * self.nvars
        exps[i] = 1
        return Poly._raw(self, {tuple(exps): ONE})

    def gens(self) -> List["Poly"]:
        return [self.gen(i) for i in range(self.nvars)]

    def monomial(self, exps: Sequence[int], coeff=1) -> "Poly":
        exps = tuple(int(e) for e in exps)
        if len(exps) != self.nvars:
            raise DimensionMismatchError("Exponent vector of length {} in ring of {} variables".format(len(exps), self.nvars))
        return Poly(self, {exps: coeff})

    def __str__(self):
        return "Ring({})".format(",".join(self.names))


@dataclass(frozen=True)
class WeightSystem:
    """Invariant degrees d_1 = 2 < d_2 < ... < d_n = h."""

    weights: Tuple[int, ...]

    def __post_init__(self):
        ws = tuple(int(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        if not ws:
            raise ValueError("Empty weight system")
        if ws[0] != 2:
            raise ValueError("First weight must be 2, got {}".format(ws[0]))
        if any(a >= b for a, b in zip(ws, ws[1:])):
            raise ValueError("Weights must be strictly ascending: {}".format(ws))

    @property
    def coxeter_number(self) -> int:
        return self.weights[-1]

    @property
    def rank(self) -> int:
        return len(self.weights)

    def dual(self, alpha: int) -> int:
        """Index alpha* with d_alpha + d_alpha* = h + 2."""
        target = self.coxeter_number + 2 - self.weights[alpha]
        try:
            return self.weights.index(target)
        except ValueError:
            raise ValueError("Degree {} has no dual degree in {}".format(self.weights[alpha], self.weights))

    def ring(self, prefix: str) -> Ring:
        return Ring(tuple("{}{}".format(prefix, d) for d in self.weights), self.weights)


class Poly:
    __slots__ = ("ring", "_terms", "_sorted", "_hash")

    def __init__(self, ring: Ring, terms: Optional[Dict] = None, homogeneous: Optional[int] = None):
        """

        Params
        --
        - ring [Ring] variables of the polynomial
        - terms [dict] exponent tuple -> coefficient (anything toRational accepts)
        - homogeneous [int] when given, every term must have this weighted degree
        """
        clean = {}
        n = ring.nvars
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise DimensionMismatchError("Exponent vector {} does not fit {}".format(exps, ring))
            if any(e < 0 for e in exps):
                raise ValueError("Negative exponent in {}".format(exps))
            q = toRational(c)
            if exps in clean:
                q = clean[exps] + q
            if q == 0:
                clean.pop(exps, None)
            else:
                clean[exps] = q
        self.ring = ring
        self._terms = clean
        self._sorted = None
        self._hash = None
        if homogeneous is not None:
            for exps in clean:
                if ring.monomial_degree(exps) != homogeneous:
                    raise ValueError(
                        "Term {} has weighted degree {}, expected {}".format(exps, ring.monomial_degree(exps), homogeneous)
                    )

    @classmethod
    def _raw(cls, ring: Ring, terms: Dict) -> "Poly":
        p = cls.__new__(cls)
        p.ring = ring
        p._terms = terms
        p._sorted = None
        p._hash = None
        return p

    #####  Inspection  #####

    def terms(self) -> List[Tuple[Exponents, MPQ]]:
        """Terms in canonical (descending) order."""
        if self._sorted is None:
            key = self.ring.sort_key
            self._sorted = sorted(self._terms.items(), key=lambda t: key(t[0]), reverse=True)
        return self._sorted

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms())

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and not any(next(iter(self._terms))))

    def constant_value(self) -> MPQ:
        """Value of a constant polynomial. Raises ValueError otherwise."""
        if not self._terms:
            return ZERO
        if not self.is_constant():
            raise ValueError("Polynomial {} is not constant".format(self))
        return next(iter(self._terms.values()))

    def coefficient(self, exps: Sequence[int]) -> MPQ:
        return self._terms.get(tuple(exps), ZERO)

    def leading_term(self) -> Tuple[Exponents, MPQ]:
        if not self._terms:
            raise ValueError("Zero polynomial has no leading term")
        return self.terms()[0]

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def weighted_degree(self) -> int:
        return max((self.ring.monomial_degree(e) for e in self._terms), default=-1)

    def is_homogeneous(self, degree: Optional[int] = None) -> bool:
        degs = {self.ring.monomial_degree(e) for e in self._terms}
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return degree is None or degs.pop() == degree

    def variables_used(self) -> List[int]:
        used = set()
        for exps in self._terms:
            used.update(i for i, e in enumerate(exps) if e)
        return sorted(used)

    #####  Arithmetic  #####

    def _check(self, other: "Poly"):
        if self.ring is not other.ring and self.ring != other.ring:
            raise RingMismatchError("{} vs {}".format(self.ring, other.ring))

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return self.ring.const(other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if len(other._terms) > len(self._terms):
            return other.__add__(self)
        res = dict(self._terms)
        for m, c in other._terms.items():
            s = res.get(m)
            if s is None:
                res[m] = c
            else:
                s = s + c
                if s == 0:
                    del res[m]
                else:
                    res[m] = s
        return Poly._raw(self.ring, res)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.ring, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def scale(self, factor) -> "Poly":
        q = toRational(factor)
        if q == 0:
            return self.ring.zero()
        if q == 1:
            return self
        return Poly._raw(self.ring, {m: c * q for m, c in self._terms.items()})

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        res: Dict[Exponents, MPQ] = {}
        get = res.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = tuple([x + y for x, y in zip(ma, mb)])
                s = get(m)
                res[m] = ca * cb if s is None else s + ca * cb
        return Poly._raw(self.ring, {m: c for m, c in res.items() if c != 0})

    def __rmul__(self, other) -> "Poly":
        return self.scale(other)

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return self.scale(ONE / other.constant_value())
        return self.scale(ONE / toRational(other))

    def __pow__(self, m: int) -> "Poly":
        return poly_pow(self, m)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.ring == other.ring and self._terms == other._terms
        try:
            return self.is_constant() and self.constant_value() == toRational(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self._terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    #####  Calculus and evaluation  #####

    def diff(self, var_index: int) -> "Poly":
        return poly_diff(self, var_index)

    def evaluate(self, point: Sequence) -> MPQ:
        return poly_eval(self, point)

    def substitute(self, images: Sequence["Poly"]) -> "Poly":
        return poly_substitute(self, images)

    def specialize(self, values: Dict[int, object]) -> "Poly":
        """Partial evaluation: variables in `values` are replaced by numbers; the ring is kept."""
        vals = {i: toRational(v) for i, v in values.items()}
        res: Dict[Exponents, MPQ] = {}
        for exps, c in self._terms.items():
            coeff = c
            new = list(exps)
            for i, v in vals.items():
                e = exps[i]
                if e:
                    coeff = coeff * v ** e
                    new[i] = 0
            if coeff == 0:
                continue
            key = tuple(new)
            s = res.get(key)
            res[key] = coeff if s is None else s + coeff
        return Poly._raw(self.ring, {m: c for m, c in res.items() if c != 0})

    def embed(self, ring: Ring, positions: Sequence[int]) -> "Poly":
        """Re-home into a larger ring; variable i goes to ring index positions[i]."""
        if len(positions) != self.ring.nvars:
            raise DimensionMismatchError("One position per variable is required")
        n = ring.nvars
        res = {}
        for exps, c in self._terms.items():
            new = [0] * n
            for i, e in enumerate(exps):
                if e:
                    new[positions[i]] = e
            res[tuple(new)] = c
        return Poly._raw(ring, res)

    def __str__(self):
        from saito_sdk.saito_message import serialize

        return serialize(self)

    def __repr__(self):
        return "Poly({!r}, {})".format(",".join(self.ring.names), str(self))


#####  Module level operations  #####


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    """
    Exact add/sub/mul of two polynomials of the same ring.

    Params
    --
    - a, b [Poly] operands
    - op [str] one of "add", "sub", "mul"
    """
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError("Unknown operation {!r}".format(op))


def _is_linear(p: Poly) -> bool:
    return all(sum(e) == 1 for e in p._terms)


def poly_pow(p: Poly, m: int) -> Poly:
    if m < 0:
        raise ValueError("Negative exponent {}".format(m))
    if m == 0:
        return p.ring.one()
    if m == 1 or not p._terms:
        return p
    if len(p._terms) == 1:
        exps, c = next(iter(p._terms.items()))
        return Poly._raw(p.ring, {tuple(e * m for e in exps): c ** m})
    if _is_linear(p):
        coeffs = [ZERO] * p.ring.nvars
        for exps, c in p._terms.items():
            coeffs[exps.index(1)] = c
        return linear_form_power(p.ring, coeffs, m)
    result = None
    base = p
    while m:
        if m & 1:
            result = base if result is None else result * base
        m >>= 1
        if m:
            base = base * base
    return result


def accumulate_linear_power(into: Dict, coeffs: Sequence, m: int, weight=ONE) -> Dict:
    """
    Adds weight * (sum_i coeffs[i]*x_i)^m into the term dict `into`, by
    multinomial expansion over the support of the form.
    """
    n = len(coeffs)
    support = [i for i, c in enumerate(coeffs) if c != 0]
    if not support:
        if m == 0:
            key = (0,) * n
            into[key] = into.get(key, ZERO) + weight
        return into
    integral = all(toRational(coeffs[i]).denominator == 1 for i in support)
    if integral:
        cs = [int(toRational(coeffs[i]).numerator) for i in support]
        unit = 1
    else:
        cs = [toRational(coeffs[i]) for i in support]
        unit = ONE
    powers = []
    for c in cs:
        row = [unit]
        for _ in range(m):
            row.append(row[-1] * c)
        powers.append(row)
    last = len(support) - 1
    exps = [0] * n
    weight = toRational(weight)
    get = into.get

    def rec(k, remaining, coeff):
        idx = support[k]
        if k == last:
            exps[idx] = remaining
            key = tuple(exps)
            val = weight * (coeff * powers[k][remaining])
            s = get(key)
            into[key] = val if s is None else s + val
            exps[idx] = 0
            return
        pk = powers[k]
        for e in range(remaining, -1, -1):
            exps[idx] = e
            rec(k + 1, remaining - e, coeff * comb(remaining, e) * pk[e])
        exps[idx] = 0

    rec(0, m, unit)
    return into


def linear_form_power(ring: Ring, coeffs: Sequence, m: int) -> Poly:
    if len(coeffs) != ring.nvars:
        raise DimensionMismatchError("Form has {} coefficients, ring has {} variables".format(len(coeffs), ring.nvars))
    terms = accumulate_linear_power({}, coeffs, m)
    return Poly._raw(ring, {k: v for k, v in terms.items() if v != 0})


def poly_diff(p: Poly, var_index: int) -> Poly:
    if not 0 <= var_index < p.ring.nvars:
        raise IndexError("Variable index {} outside {}".format(var_index, p.ring))
    res = {}
    for exps, c in p._terms.items():
        e = exps[var_index]
        if e:
            new = list(exps)
            new[var_index] = e - 1
            res[tuple(new)] = c * e
    return Poly._raw(p.ring, res)


def _power_table(values, max_exps):
    table = []
    for v, top in zip(values, max_exps):
        row = [1]
        for _ in range(top):
            row.append(row[-1] * v)
        table.append(row)
    return table


def poly_eval(p: Poly, point: Sequence) -> MPQ:
    """
    Exact value of p at a point.

    Params
    --
    - p [Poly] polynomial
    - point [sequence] one rational per ring variable

    Returns
    --
    [MPQ] p(point)
    """
    if len(point) != p.ring.nvars:
        raise DimensionMismatchError("Point of length {} for {}".format(len(point), p.ring))
    if not p._terms:
        return ZERO
    vals = [toRational(v) for v in point]
    if all(v.denominator == 1 for v in vals):
        vals = [int(v.numerator) for v in vals]
    max_exps = [max(e[i] for e in p._terms) for i in range(p.ring.nvars)]
    table = _power_table(vals, max_exps)
    total = ZERO
    for exps, c in p._terms.items():
        t = 1
        for i, e in enumerate(exps):
            if e:
                t = t * table[i][e]
        total = total + c * t
    return toRational(total)


def _monomial_images(images: Sequence[Poly]):
    """(target index, coefficient) per variable if every image is c*x_j, else None."""
    out = []
    for img in images:
        if len(img._terms) != 1:
            return None
        exps, c = next(iter(img._terms.items()))
        if sum(exps) != 1:
            return None
        out.append((exps.index(1), c))
    return out


def poly_substitute(p: Poly, images: Sequence[Poly], target: Optional[Ring] = None) -> Poly:
    """
    Composition p(images[0], ..., images[n-1]).

    All images must share one ring; `target` is only needed when p has no
    variables to substitute.
    """
    if len(images) != p.ring.nvars:
        raise DimensionMismatchError("{} images for {}".format(len(images), p.ring))
    if images:
        target = images[0].ring
        for img in images:
            if img.ring != target:
                raise RingMismatchError("Images live in different rings: {} vs {}".format(target, img.ring))
    if target is None:
        target = p.ring
    if not p._terms:
        return target.zero()

    simple = _monomial_images(images)
    if simple is not None:
        res: Dict[Exponents, MPQ] = {}
        n = target.nvars
        for exps, c in p._terms.items():
            new = [0] * n
            coeff = c
            for i, e in enumerate(exps):
                if e:
                    j, a = simple[i]
                    new[j] += e
                    coeff = coeff * a ** e
            key = tuple(new)
            s = res.get(key)
            res[key] = coeff if s is None else s + coeff
        return Poly._raw(target, {m: c for m, c in res.items() if c != 0})

    powers: List[List[Poly]] = [[target.one()] for _ in images]

    def power(i, e):
        row = powers[i]
        while len(row) <= e:
            row.append(row[-1] * images[i])
        return row[e]

    def rec(terms, k):
        # substitute variables 0..k of the given terms (higher ones already stripped)
        if k < 0:
            return target.const(sum((c for _, c in terms), ZERO))
        groups: Dict[int, list] = {}
        for exps, c in terms:
            groups.setdefault(exps[k], []).append((exps, c))
        out = target.zero()
        for e, group in groups.items():
            inner = rec(group, k - 1)
            out = out + (inner if e == 0 else power(k, e) * inner)
        return out

    return rec(list(p._terms.items()), p.ring.nvars - 1)


def _enumerate(weights: Sequence[int], degree: int) -> List[Exponents]:
    n = len(weights)
    out: List[Exponents] = []
    exps = [0] * n

    def rec(i, remaining):
        if i < 0:
            if remaining == 0:
                out.append(tuple(exps))
            return
        w = weights[i]
        if w == 0:
            raise ValueError("Zero weight makes the enumeration infinite")
        for e in range(remaining // w, -1, -1):
            exps[i] = e
            rec(i - 1, remaining - e * w)
        exps[i] = 0

    rec(n - 1, degree)
    return out


def enumerate_weighted_monomials(ws, degree: int) -> List[Exponents]:
    """
    All exponent vectors e with sum(e_i * d_i) == degree, in canonical
    (descending) order.

    Params
    --
    - ws [WeightSystem|Ring|sequence] the weights d_i
    - degree [int] target weighted degree
    """
    if degree < 0:
        return []
    if isinstance(ws, WeightSystem):
        weights = ws.weights
    elif isinstance(ws, Ring):
        weights = ws.weights
    else:
        weights = tuple(ws)
    # recursion from the last variable yields exactly the canonical order
    return _enumerate(weights, degree)


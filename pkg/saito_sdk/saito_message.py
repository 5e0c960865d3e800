"""
Canonical text codec for polynomials, run manifests and golden fixtures
Author: Saito SDK developers
Copyright 2024

Canonical polynomial format: terms in canonical order, each written as
+-num/den*v^e*..., with the sign of the first term only printed when negative,
unit coefficients elided in front of a monomial, /1 and ^1 elided, variables
of a term printed most significant first, no whitespace. The zero polynomial
is "0".
"""
import configparser
import logging
import os
from dataclasses import dataclass, field
from math import gcd
from typing import Dict, List, Optional, Sequence, Tuple

from saito_sdk.errors import ParseError
from saito_sdk.polycore import Poly, Ring
from saito_sdk.utils import MPQ, ONE, toRational

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")

_log = logging.getLogger(__name__)


#####  Polynomials  #####


def _format_rational(q) -> str:
    num, den = int(q.numerator), int(q.denominator)
    return str(num) if den == 1 else "{}/{}".format(num, den)


def _format_monomial(ring: Ring, exps) -> str:
    parts = []
    for i in range(ring.nvars - 1, -1, -1):
        e = exps[i]
        if e == 1:
            parts.append(ring.names[i])
        elif e > 1:
            parts.append("{}^{}".format(ring.names[i], e))
    return "*".join(parts)


def serialize(p: Poly) -> str:
    """Canonical text of p."""
    if p.is_zero():
        return "0"
    out = []
    for k, (exps, c) in enumerate(p.terms()):
        sign = "-" if c < 0 else ("+" if k else "")
        a = -c if c < 0 else c
        mono = _format_monomial(p.ring, exps)
        if not mono:
            body = _format_rational(a)
        elif a == 1:
            body = mono
        else:
            body = "{}*{}".format(_format_rational(a), mono)
        out.append(sign + body)
    return "".join(out)


class _Scanner:
    def __init__(self, text: str, strict: bool):
        self.text = text
        self.pos = 0
        self.strict = strict

    def where(self, pos: Optional[int] = None) -> Tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def fail(self, message: str, pos: Optional[int] = None):
        line, col = self.where(pos)
        raise ParseError(message, line, col)

    def skip_space(self):
        if self.strict:
            if self.pos < len(self.text) and self.text[self.pos].isspace():
                self.fail("whitespace is not allowed in canonical text")
            return
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_space()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def integer(self) -> Tuple[int, str]:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        digits = self.text[start:self.pos]
        if not digits:
            self.fail("expected a number")
        if self.strict and len(digits) > 1 and digits[0] == "0":
            self.fail("leading zero in number", start)
        return int(digits), digits

    def name(self) -> str:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos or self.text[start].isdigit():
            self.fail("expected a variable name", start)
        return self.text[start:self.pos]


def parse(text: str, ring: Ring, strict: bool = True) -> Poly:
    """
    Parses polynomial text into `ring`.

    Params
    --
    - text [str] polynomial text
    - ring [Ring] target ring; every variable must belong to it
    - strict [bool] reject anything that is not the canonical form of its value
      (used for cache files). Fixtures are read with strict=False, which
      allows whitespace, any term order, "1*", "/1", "^1" and repeated terms.

    Returns
    --
    [Poly] the parsed polynomial
    """
    sc = _Scanner(text, strict)
    if sc.peek() == "0" and strict:
        sc.pos += 1
        if sc.pos == len(text):
            return ring.zero()
        sc.pos -= 1
    terms: Dict[Tuple[int, ...], MPQ] = {}
    previous_key = None
    first = True
    while True:
        sc.skip_space()
        if sc.pos >= len(text):
            if first:
                sc.fail("empty polynomial")
            break
        term_start = sc.pos
        if sc.take("-"):
            sign = -1
        elif sc.take("+"):
            if strict and first:
                sc.fail("leading '+' is not canonical", term_start)
            sign = 1
        else:
            if not first:
                sc.fail("expected '+' or '-' between terms")
            sign = 1
        coeff = ONE
        exps = [0] * ring.nvars
        has_coeff = False
        has_mono = False
        star = False
        if sc.peek().isdigit():
            num_pos = sc.pos
            num, _ = sc.integer()
            den = 1
            if sc.take("/"):
                den_pos = sc.pos
                den, _ = sc.integer()
                if den == 0:
                    sc.fail("zero denominator", den_pos)
                if strict and den == 1:
                    sc.fail("'/1' is not canonical", den_pos)
                if strict and gcd(num, den) != 1:
                    sc.fail("coefficient not in lowest terms", num_pos)
            if strict and num == 0:
                sc.fail("zero coefficient", num_pos)
            coeff = MPQ(num, den)
            has_coeff = True
            star = sc.take("*")
            if star:
                if strict and coeff == 1:
                    sc.fail("unit coefficient must be elided", num_pos)
                if sc.peek() == "*":
                    sc.fail("unexpected '*'")
            else:
                if sc.peek().isalpha():
                    sc.fail("expected '*' between coefficient and monomial")
        if not has_coeff or star:
            last_index = None
            while True:
                var_pos = sc.pos
                name = sc.name()
                try:
                    idx = ring.index(name)
                except KeyError:
                    sc.fail("unknown variable {!r}".format(name), var_pos)
                e = 1
                if sc.take("^"):
                    exp_pos = sc.pos
                    e, _ = sc.integer()
                    if strict and e <= 1:
                        sc.fail("exponent {} is not canonical".format(e), exp_pos)
                elif not strict and sc.text.startswith("**", sc.pos):
                    sc.pos += 2
                    e, _ = sc.integer()
                if strict:
                    if exps[idx]:
                        sc.fail("variable {!r} repeated in a term".format(name), var_pos)
                    if last_index is not None and idx >= last_index:
                        sc.fail("variables of a term out of order", var_pos)
                exps[idx] += e
                last_index = idx
                has_mono = True
                save = sc.pos
                if sc.take("*"):
                    if not sc.peek().isalpha():
                        sc.fail("expected a variable after '*'")
                    continue
                sc.pos = save
                break
        if not has_coeff and not has_mono:
            sc.fail("expected a term")
        key = tuple(exps)
        value = coeff * sign
        if strict:
            if key in terms:
                sc.fail("repeated monomial", term_start)
            sort_key = ring.sort_key(key)
            if previous_key is not None and not sort_key < previous_key:
                sc.fail("terms out of canonical order", term_start)
            previous_key = sort_key
            terms[key] = value
        else:
            terms[key] = terms.get(key, 0) + value
        first = False
    return Poly(ring, terms)


#####  Manifests  #####


def encodeManifest(fields: Dict[str, str], artifacts: Dict[str, str]) -> str:
    """
    key=value lines in the given order followed by sorted artifact lines

    Params
    --
    - fields [dict] configuration and metadata
    - artifacts [dict] relative path -> sha256 hex digest
    """
    lines = ["{}={}".format(k, v) for k, v in fields.items()]
    for path in sorted(artifacts):
        lines.append("artifact={} sha256={}".format(path, artifacts[path]))
    return "\n".join(lines) + "\n"


def decodeManifest(text: str) -> Tuple[Dict[str, str], Dict[str, str]]:
    fields, artifacts = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("artifact="):
            path, sep, digest = line[len("artifact="):].partition(" sha256=")
            if not sep:
                raise ParseError("artifact line without hash", lineno, 1)
            artifacts[path] = digest.strip()
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected key=value", lineno, 1)
        fields[key] = value
    return fields, artifacts


#####  Fixtures  #####


@dataclass
class FixtureSet:
    """Golden data transcribed from the published tables, one INI file per group."""

    group: str
    metric: Dict[Tuple[int, int], Poly] = field(default_factory=dict)
    eta: Dict[Tuple[int, int], Poly] = field(default_factory=dict)
    frame: Dict[int, Poly] = field(default_factory=dict)
    frame_scale: Dict[int, MPQ] = field(default_factory=dict)
    potential: Optional[Poly] = None
    anomalies: Dict[str, str] = field(default_factory=dict)
    path: str = ""

    @classmethod
    def load(cls, g, directory: str = FIXTURE_DIR) -> "FixtureSet":
        """
        Params
        --
        - g [GroupSpec] group whose fixture file is read
        - directory [str] fixture directory
        """
        path = os.path.join(directory, "{}.ini".format(g.name))
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        with open(path, encoding="utf8") as fh:
            cp.read_file(fh)
        fx = cls(group=g.name, path=path)
        gring, fring = g.generator_ring, g.flat_ring

        def poly(section, key, ring):
            try:
                return parse(cp.get(section, key), ring, strict=False)
            except ParseError as e:
                raise ParseError("{} [{}] {}: {}".format(os.path.basename(path), section, key, e.reason), e.line, e.column)

        if cp.has_section("metric"):
            for key in cp.options("metric"):
                fx.metric[_pair(key)] = poly("metric", key, gring)
        if cp.has_section("eta"):
            for key in cp.options("eta"):
                fx.eta[_pair(key)] = poly("eta", key, gring)
        if cp.has_section("frame"):
            for key in cp.options("frame"):
                if key.endswith(".scale"):
                    fx.frame_scale[int(key[2:-6])] = toRational(cp.get("frame", key))
                else:
                    fx.frame[int(key[2:])] = poly("frame", key, gring)
        if cp.has_section("potential") and cp.has_option("potential", "f"):
            fx.potential = poly("potential", "f", fring)
        if cp.has_section("anomalies"):
            fx.anomalies = {k: " ".join(cp.get("anomalies", k).split()) for k in cp.options("anomalies")}
        return fx

    def consistency_errors(self, g) -> List[str]:
        """Grading checks that hold independently of any computation."""
        errors = []
        h = g.coxeter_number
        for (a, b), p in sorted(self.metric.items()):
            if not p.is_homogeneous(a + b - 2):
                errors.append("metric g_{}_{} is not of degree {}".format(a, b, a + b - 2))
        for (a, b), p in sorted(self.eta.items()):
            if not p.is_homogeneous(a + b - 2 - h):
                errors.append("eta_{}_{} is not of degree {}".format(a, b, a + b - 2 - h))
        for d, p in sorted(self.frame.items()):
            if not p.is_homogeneous(d):
                errors.append("frame t_{} is not of degree {}".format(d, d))
            elif p.leading_term()[1] != 1:
                errors.append("frame t_{} bracket is not monic".format(d))
        if self.potential is not None:
            for exps, _ in self.potential.terms():
                if g.flat_ring.monomial_degree(exps) != 2 * h + 2:
                    errors.append("potential term {} is not of degree {}".format(
                        _format_monomial(g.flat_ring, exps), 2 * h + 2))
        return errors


def _pair(key: str) -> Tuple[int, int]:
    _, a, b = key.split("_")
    return int(a), int(b)


class SAITOMESSAGE:
    """
    Encoder/decoder for the artifact files of a run: one object per group so
    the rings are resolved once.
    """

    def __init__(self, group, debug=False) -> None:
        self._debug = debug
        if self._debug:
            d_level = logging.DEBUG
        else:
            d_level = logging.INFO
        LOG_FORMAT = "[%(levelname)s] %(asctime)s [SAITOMESSAGE::%(funcName)s] :\t%(message)s"
        logging.basicConfig(format=LOG_FORMAT, level=d_level)
        self._logger = logging.getLogger(self.__class__.__name__)
        self._group = group

    def encodeMsg(self, p: Poly) -> str:
        return serialize(p) + "\n"

    def decodeMsg(self, text: str, ring: Ring) -> Optional[Poly]:
        """
        Parses a cached artifact. Returns None (and logs) when the file is not canonical
        """
        try:
            return parse(text.rstrip("\n"), ring, strict=True)
        except ParseError as e:
            self._logger.error("Could not decode artifact: %s", e)
            return None

    def ringFor(self, kind: str) -> Ring:
        if kind in ("invariants",):
            return self._group.chart_ring
        if kind == "potential":
            return self._group.flat_ring
        return self._group.generator_ring

"""
@file test_message.py
@Description: Canonical polynomial text, run manifests and the golden fixture files
@Author: Saito SDK developers
Copyright 2024
"""
import random

import pytest

from saito_sdk.errors import ParseError
from saito_sdk.groups import group_spec
from saito_sdk.polycore import Poly
from saito_sdk.saito_message import (
    SAITOMESSAGE,
    FixtureSet,
    decodeManifest,
    encodeManifest,
    parse,
    serialize,
)
from saito_sdk.utils import MPQ


@pytest.fixture
def ring(a2):
    return a2.generator_ring


@pytest.fixture
def sample(ring):
    p2, p3 = ring.gens()
    return p3 ** 2 - p2 ** 3 * MPQ(1, 2)


def test_serialize_canonical(ring, sample):
    p2, p3 = ring.gens()
    assert serialize(sample) == "p3^2-1/2*p2^3"
    assert serialize(ring.zero()) == "0"
    assert serialize(p2 * p3 * 4 - 7) == "4*p3*p2-7"
    assert serialize(-p3) == "-p3"


def test_parse_canonical(ring, sample):
    assert parse("p3^2-1/2*p2^3", ring) == sample
    assert parse("0", ring).is_zero()


@pytest.mark.parametrize(
    "text",
    [
        "p3^2 -1/2*p2^3",
        "-1/2*p2^3+p3^2",
        "p3^2-2/4*p2^3",
        "1*p3^2-1/2*p2^3",
        "+p3^2-1/2*p2^3",
        "p3^2-1/2*p2^3+",
        "p2*p3",
        "p3^1",
        "p3^2+p3^2",
        "3/1*p3",
        "007*p3",
        "p3^2-1/2*q2^3",
        "",
    ],
)
def test_strict_rejections(ring, text):
    with pytest.raises(ParseError):
        parse(text, ring)


def test_lenient_parsing(ring, sample):
    assert parse("  -1/2 * p2**3 + 1*p3^2 ", ring, strict=False) == sample
    assert parse("p3^2+p3^2-1/2*p2^3-p3^2", ring, strict=False) == sample
    assert parse("p2*p3", ring, strict=False) == parse("p3*p2", ring)
    assert parse("p3 ^ 2 - 1/2 *  p2 ^ 3", ring, strict=False) == sample
    assert parse("-1/2 *\n    p2^3 + p3^2", ring, strict=False) == sample
    assert parse("-1/2*\np2^3+p3^2", ring, strict=False) == sample


def test_round_trip_on_random_polynomials(e6):
    rng = random.Random("round-trip")
    rings = (e6.generator_ring, e6.flat_ring, e6.chart_ring)
    for k in range(1000):
        ring = rings[k % 3]
        terms = {}
        for _ in range(rng.randint(0, 6)):
            exps = tuple(rng.randint(0, 3) for _ in range(ring.nvars))
            terms[exps] = MPQ(rng.randint(-10 ** 6, 10 ** 6), rng.randint(1, 10 ** 4))
        p = Poly(ring, terms)
        assert parse(serialize(p), ring) == p


def test_parse_error_position(ring):
    with pytest.raises(ParseError) as err:
        parse("p3^2 -1/2*p2^3", ring)
    assert (err.value.line, err.value.column) == (1, 5)
    with pytest.raises(ParseError) as err:
        parse("p3^2\n+q2", ring, strict=False)
    assert (err.value.line, err.value.column) == (2, 2)
    assert "unknown variable" in err.value.reason


def test_manifest():
    text = encodeManifest({"group": "E6", "solver": "modular"}, {"b.txt": "ab", "a.txt": "cd"})
    assert text == "group=E6\nsolver=modular\nartifact=a.txt sha256=cd\nartifact=b.txt sha256=ab\n"
    fields, artifacts = decodeManifest(text)
    assert fields == {"group": "E6", "solver": "modular"}
    assert artifacts == {"a.txt": "cd", "b.txt": "ab"}


def test_manifest_rejects_garbage():
    with pytest.raises(ParseError) as err:
        decodeManifest("group=E6\nnonsense\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        decodeManifest("artifact=a.txt\n")


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_fixtures_are_consistent(name):
    g = group_spec(name)
    fx = FixtureSet.load(g)
    assert fx.consistency_errors(g) == []
    assert fx.potential is not None
    assert "f.count" in fx.anomalies


def test_e6_fixture_contents(e6):
    fx = FixtureSet.load(e6)
    assert len(fx.metric) == 21
    assert fx.metric[5, 9].coefficient((1, 2, 0, 0, 0, 0)) == MPQ(56, 5)
    assert fx.metric[8, 12].coefficient((1, 0, 0, 2, 0, 0)) == MPQ(2468, 5)
    assert len(fx.eta) == 9
    assert sorted(fx.frame) == [2, 5, 6, 8, 9, 12]
    assert fx.frame_scale == {8: MPQ(3, 16), 9: MPQ(1, 7)}
    assert len(fx.potential) == 24
    assert not any(key.startswith("g_") for key in fx.anomalies)


def test_fixture_anomalies_recorded():
    e7 = FixtureSet.load(group_spec("E7"))
    e8 = FixtureSet.load(group_spec("E8"))
    assert e7.frame_scale[18] == MPQ(2, 1229)
    assert len(e7.potential) == 79
    assert "t_18.scale" in e7.anomalies
    assert e8.frame_scale[30] == MPQ(96, 61)
    assert len(e8.potential) == 140
    assert "f.t14^3" in e8.anomalies
    assert "t_30.scale" not in e8.anomalies


def test_consistency_errors_flag_wrong_degrees(tmp_path, a2):
    (tmp_path / "A2.ini").write_text("[eta]\neta_2_3 = 6\neta_3_3 = p2\n\n[potential]\nf = t3^2*t2 + t2^3\n")
    fx = FixtureSet.load(a2, str(tmp_path))
    errors = fx.consistency_errors(a2)
    assert len(errors) == 2
    assert errors[0].startswith("eta_3_3")
    assert errors[1].startswith("potential term t2^3")


def test_message_codec(e6):
    codec = SAITOMESSAGE(e6)
    u2, u5 = e6.generator_ring.gen(0), e6.generator_ring.gen(1)
    p = u5 * u2 * 3 - u2 ** 2
    ring = codec.ringFor("metric")
    assert codec.decodeMsg(codec.encodeMsg(p), ring) == p
    assert codec.decodeMsg("u5 * u2", ring) is None
    assert codec.ringFor("potential") == e6.flat_ring
    assert codec.ringFor("invariants") == e6.chart_ring

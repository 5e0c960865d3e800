"""
@file test_groups.py
@Description: Group catalog, basic invariants and the Cartan metric
@Author: Saito SDK developers
Copyright 2024
"""
import random

import pytest

from saito_sdk.errors import UnknownGroupError
from saito_sdk.exactla import RatMatrix
from saito_sdk.groups import (
    CATALOG,
    InvariantEvaluator,
    basic_invariants,
    build_basic_invariant,
    cartan_metric,
    check_invariance,
    form_family_closed,
    group_spec,
    jacobian_rank,
)
from saito_sdk.utils import MPQ


@pytest.mark.parametrize(
    "name, degrees",
    [
        ("E6", (2, 5, 6, 8, 9, 12)),
        ("E7", (2, 6, 8, 10, 12, 14, 18)),
        ("E8", (2, 8, 12, 14, 18, 20, 24, 30)),
        ("A2", (2, 3)),
        ("A3", (2, 3, 4)),
    ],
)
def test_catalog(name, degrees):
    g = group_spec(name)
    assert g.name == name
    assert g.degrees == degrees
    assert g.rank == len(degrees)
    assert g.coxeter_number == degrees[-1]
    assert form_family_closed(g)
    assert g.generator_ring.names[-1].endswith(str(degrees[-1]))
    assert g.flat_ring.names == tuple("t{}".format(d) for d in degrees)


def test_lookup_is_case_insensitive():
    assert group_spec("e7") is group_spec("E7")
    assert group_spec(" e6 ") is group_spec("E6")


@pytest.mark.parametrize(
    "name, count, up_to_sign",
    [("E6", 27, False), ("E7", 56, False), ("E8", 120, True)],
)
def test_one_form_family(name, count, up_to_sign):
    g = group_spec(name)
    assert len(g.form_families) == 1
    family = g.form_families[0]
    assert len(family.forms) == count
    assert family.up_to_sign is up_to_sign


def test_e8_quadratic_invariant_is_half_the_norm():
    e8 = group_spec("E8")
    assert e8.quad_normalizer == MPQ(1, 60)
    assert e8.top_prefactor == MPQ(96, 61)
    pt = tuple(MPQ(v) for v in (1, 2, 3, 4, 5, 6, 7, 8))
    amb = e8.lift(pt)
    assert amb[8] == -36
    values, _ = InvariantEvaluator(e8).evaluate(pt, gradients=False)
    assert values[0] == sum(x * x for x in amb) / 2 == 750


def test_unknown_group():
    with pytest.raises(UnknownGroupError):
        group_spec("E9")
    assert "E9" not in CATALOG


def test_a2_invariants(a2):
    x1, x2 = a2.chart_ring.gens()
    p2, p3 = basic_invariants(a2)
    assert p2 == x1 ** 2 + x1 * x2 + x2 ** 2
    assert p3 == -3 * x1 ** 2 * x2 - 3 * x1 * x2 ** 2


@pytest.mark.parametrize("name", ["A2", "A3"])
def test_invariance_small_groups(name):
    g = group_spec(name)
    for p in basic_invariants(g):
        assert check_invariance(g, p)


@pytest.mark.parametrize("degree", [2, 5, 6])
def test_invariance_e6(e6, degree):
    assert check_invariance(e6, build_basic_invariant(e6, degree))


def test_non_invariant_is_detected(a2):
    x1, _ = a2.chart_ring.gens()
    assert not check_invariance(a2, x1 ** 2)


def test_e8_rejects_odd_degree():
    with pytest.raises(ValueError):
        build_basic_invariant(group_spec("E8"), 3)


def test_cartan_metric(a2):
    metric = cartan_metric(a2)
    assert metric.G == RatMatrix.from_rows([[2, 1], [1, 2]])
    assert metric.contravariant() == RatMatrix.from_rows([[MPQ(4, 3), MPQ(-2, 3)], [MPQ(-2, 3), MPQ(4, 3)]])
    assert cartan_metric(a2, scale=1).contravariant() == metric.G_inv


@pytest.mark.parametrize("name", ["E6", "E7", "E8"])
def test_cartan_metric_positive_definite(name):
    metric = cartan_metric(group_spec(name))
    assert metric.G.is_symmetric()
    assert all(m > 0 for m in metric.G.leading_minors())
    assert metric.G @ metric.G_inv == RatMatrix.identity(metric.G.rows)


@pytest.mark.parametrize("name", ["A3", "E6"])
def test_evaluator_matches_symbolic(name):
    g = group_spec(name)
    rng = random.Random("evaluator")
    invariants = basic_invariants(g)
    evaluator = InvariantEvaluator(g)
    for _ in range(3):
        pt = g.random_point(rng)
        values, grads = evaluator.evaluate(pt)
        assert values == [p.evaluate(pt) for p in invariants]
        assert grads[0] == [invariants[0].diff(j).evaluate(pt) for j in range(g.rank)]


@pytest.mark.parametrize("name", ["A3", "E6", "E7", "E8"])
def test_generators_are_independent(name):
    g = group_spec(name)
    rng = random.Random("jacobian:{}".format(name))
    # generic rational point
    pt = tuple(MPQ(rng.randint(-10 ** 6, 10 ** 6), rng.randint(1, 1000)) for _ in range(g.rank))
    assert jacobian_rank(g, pt) == g.rank


def test_chart_lift_satisfies_constraints(e6):
    pt = (1, 2, 3, 4, 5, 6)
    amb = e6.lift(pt)
    for con in e6.constraints:
        assert sum(a * b for a, b in zip(con, amb)) == 0


def test_e8_degree_eight_invariant_by_brute_force():
    e8 = group_spec("E8")
    w8 = build_basic_invariant(e8, 8)
    forms = e8.form_families[0].forms
    for pt in [(1, 0, -2, 3, 1, -1, 4, 2), (MPQ(1, 2), 3, MPQ(-5, 7), 0, 1, 2, MPQ(1, 3), -4)]:
        amb = e8.lift(pt)
        brute = sum(sum(a * x for a, x in zip(f, amb)) ** 8 for f in forms)
        assert w8.evaluate(pt) == brute

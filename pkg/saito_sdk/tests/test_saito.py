"""
@file test_saito.py
@Description: Sample grids, interpolation in the generators and the metric tables
@Author: Saito SDK developers
Copyright 2024
"""
import pytest

from saito_sdk.errors import InconsistencyError
from saito_sdk.groups import basic_invariants, cartan_metric
from saito_sdk.polycore import poly_substitute
from saito_sdk.saito import (
    MetricTable,
    PairingEvaluator,
    PointCache,
    SURPLUS_ROWS,
    eta_table,
    lattice_grid,
    make_grid,
    metric_table,
    pairing_raw,
    rewrite_in_invariants,
    rewrite_symbolic,
)
from saito_sdk.utils import MPQ


def _a2_metric(g, scale=2):
    p2, p3 = g.generator_ring.gens()
    s = scale
    return [[2 * s * p2, 3 * s * p3], [3 * s * p3, 6 * s * p2 ** 2]]


def test_lattice_grid_size(e6):
    pts = lattice_grid(e6)
    assert len(pts) == 84
    assert all(1 <= v <= 4 for pt in pts for v in pt)
    assert all(list(pt) == sorted(pt) for pt in pts)


def test_grid_is_prefix_consistent(e6, a2):
    for g in (e6, a2):
        small = make_grid(g, 10)
        large = make_grid(g, 10, extension=40)
        assert len(small.points) == 10 + SURPLUS_ROWS
        assert len(large.points) == 50 + SURPLUS_ROWS
        assert large.points[: len(small.points)] == small.points
        assert len(set(large.points)) == len(large.points)


def test_grid_provenance(e6, a2):
    assert set(make_grid(e6, 10).provenance) == {"lattice-grid"}
    grid = make_grid(e6, 100)
    assert grid.provenance.count("lattice-grid") == 84
    assert grid.provenance[-1] == "random-extension"
    assert set(make_grid(a2, 3).provenance) == {"random-extension"}
    assert sorted(grid.points[:84]) == lattice_grid(e6)


def test_grid_depends_on_seed(e6):
    assert make_grid(e6, 10, seed=1).points != make_grid(e6, 10, seed=2).points
    assert make_grid(e6, 10, seed=1).points == make_grid(e6, 10, seed=1).points


@pytest.mark.parametrize("solver", ["modular", "exact"])
def test_rewrite_recovers_generator_polynomial(a3, solver):
    u2, u3, u4 = a3.generator_ring.gens()
    target = u4 * u2 * 3 - u3 * u3 + u2 ** 3 * 5
    chart = poly_substitute(target, basic_invariants(a3))
    assert rewrite_in_invariants(a3, chart, 6, solver=solver) == target


def test_rewrite_rejects_non_invariant(a2):
    x1, _ = a2.chart_ring.gens()
    with pytest.raises(InconsistencyError):
        rewrite_in_invariants(a2, x1 ** 2, 2)


def test_rewrite_without_monomials(a2):
    assert rewrite_in_invariants(a2, a2.chart_ring.zero(), 1).is_zero()


@pytest.mark.parametrize("symbolic", [False, True])
def test_a2_metric(a2, symbolic):
    table = metric_table(a2, symbolic=symbolic)
    assert [list(row) for row in table.entries] == _a2_metric(a2)


def test_metric_scale_is_linear(a2):
    table = metric_table(a2, scale=1, solver="exact")
    assert [list(row) for row in table.entries] == _a2_metric(a2, 1)


def test_pairing_evaluator_matches_symbolic(a3):
    metric = cartan_metric(a3)
    cache = PointCache(a3)
    for a in range(3):
        for b in range(a, 3):
            symbolic = pairing_raw(a3, a, b, metric)
            numeric = PairingEvaluator(a3, a, b, metric, cache)
            for pt in [(1, 2, 3), (-4, 0, 7)]:
                assert numeric.evaluate(pt) == symbolic.evaluate(pt)


def test_symbolic_and_numeric_rewriting_agree(a3):
    metric = cartan_metric(a3)
    q = pairing_raw(a3, 2, 2, metric)
    assert rewrite_symbolic(a3, q, 6) == rewrite_in_invariants(a3, q, 6)


def test_euler_row(e6, e6_tables):
    table, _ = e6_tables
    gens = e6.generator_ring.gens()
    for b, d in enumerate(e6.degrees):
        assert table.entry(0, b) == gens[b] * (2 * d)
    assert table.by_degrees(2, 12) == gens[-1] * 24


def test_eta_table(a2):
    eta = eta_table(metric_table(a2))
    assert eta.kind == "eta"
    assert eta.by_degrees(2, 3) == 6
    assert eta.by_degrees(2, 2).is_zero()
    assert eta.by_degrees(3, 3).is_zero()
    assert eta.det() == -36


def test_metric_table_validation(a2):
    p2, p3 = a2.generator_ring.gens()
    with pytest.raises(InconsistencyError):
        MetricTable(a2, "g", ((p2, p3), (p3 * 2, p2 ** 2)), a2.generator_ring)
    with pytest.raises(InconsistencyError):
        MetricTable(a2, "g", ((p2, p3), (p3, p2)), a2.generator_ring)


def test_a3_metric(a3):
    p2, p3, p4 = a3.generator_ring.gens()
    table = metric_table(a3)
    assert table.by_degrees(3, 3) == 18 * p4 - 18 * p2 ** 2
    assert table.by_degrees(3, 4) == 28 * p2 * p3
    assert table.by_degrees(4, 4) == 48 * p2 * p4 + p3 ** 2 * (MPQ(8, 3)) - 32 * p2 ** 3
    eta = eta_table(table)
    assert eta.by_degrees(2, 4) == 8
    assert eta.by_degrees(3, 3) == 18
    assert eta.by_degrees(4, 4) == 48 * p2

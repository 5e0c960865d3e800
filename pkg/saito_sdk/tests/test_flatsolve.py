"""
@file test_flatsolve.py
@Description: Flat coordinate ansatz, solving and normalization
@Author: Saito SDK developers
Copyright 2024
"""
from dataclasses import replace

import pytest

from saito_sdk.errors import InconsistencyError
from saito_sdk.flatsolve import _scale_factors, eta_in_new_coords, flat_ansatz, frame_from_brackets, solve_flat
from saito_sdk.saito import eta_table, metric_table
from saito_sdk.utils import MPQ

E6_UNKNOWNS = {
    "k1": MPQ(-15),
    "k2": MPQ(-7, 2),
    "k3": MPQ(385, 12),
    "k4": MPQ(-42, 5),
    "k5": MPQ(-209, 16),
    "k6": MPQ(-77, 576),
    "k7": MPQ(2959, 96),
    "k8": MPQ(-121, 120),
    "k9": MPQ(-6633, 32),
}


@pytest.fixture
def a3_eta(a3):
    return eta_table(metric_table(a3))


def test_a2_frame(a2):
    frame = solve_flat(a2, eta_table(metric_table(a2)))
    p2, p3 = a2.generator_ring.gens()
    assert frame.coords == (p2, p3)
    assert frame.scale_factors == (1, 1)
    assert frame.antidiagonal == 6
    assert frame.unknowns == ()


def test_a3_frame(a3, a3_eta):
    frame = solve_flat(a3, a3_eta)
    p2, p3, p4 = a3.generator_ring.gens()
    assert frame.coords[0] == p2
    assert frame.coords[1] == p3 * MPQ(2, 3)
    assert frame.coords[2] == p4 - p2 ** 2 * MPQ(3, 2)
    assert frame.scale_factors == (1, MPQ(2, 3), 1)
    assert frame.bracket(1) == p3
    assert frame.antidiagonal == 8
    assert frame.unknowns == (("k1", MPQ(-3, 2)),)


def test_a3_inverse_images(a3, a3_eta):
    frame = solve_flat(a3, a3_eta)
    t2, t3, t4 = a3.flat_ring.gens()
    images = frame.inverse_images()
    assert images == [t2, t3 * MPQ(3, 2), t4 + t2 ** 2 * MPQ(3, 2)]
    assert frame.to_flat(frame.coords[2]) == t4


def test_eta_is_constant_in_the_frame(a3, a3_eta):
    frame = solve_flat(a3, a3_eta)
    eta_t = eta_in_new_coords(frame.coords, a3_eta)
    for a in range(3):
        for b in range(3):
            assert eta_t[a][b] == frame.eta_const[a, b]


def _antidiagonal_eta(g, outer, middle):
    c = g.generator_ring.const
    z = c(0)
    return ((z, z, c(outer)), (z, c(middle), z), (c(outer), z, z))


def test_self_dual_coordinate_sets_the_top_prefactor(a3):
    # eta^{2,h} : eta^{m,m} = 1229 : 49000, the ratio met in E7 at t_10
    scales = _scale_factors(a3, _antidiagonal_eta(a3, 1229, 49000))
    assert scales == (1, MPQ(1, 70), MPQ(10, 1229))


def test_square_ratio_keeps_the_top_coordinate_monic(a3):
    assert _scale_factors(a3, _antidiagonal_eta(a3, 4, 9)) == (1, MPQ(2, 3), 1)


def test_fixed_top_prefactor_without_rational_root(a3):
    g = replace(a3, top_prefactor=MPQ(2, 1229))
    with pytest.raises(InconsistencyError, match="square root of 1/24500"):
        _scale_factors(g, _antidiagonal_eta(g, 1229, 49000))


def test_top_prefactor_leaves_the_antidiagonal_invariant(a2):
    g = replace(a2, top_prefactor=MPQ(96, 61))
    eta = eta_table(metric_table(g))
    frame = solve_flat(g, eta)
    p2, p3 = g.generator_ring.gens()
    assert frame.scale_factors == (1, MPQ(96, 61))
    assert frame.coords == (p2, p3 * MPQ(96, 61))
    assert frame.antidiagonal == 6
    assert frame.bracket(1) == p3
    assert frame_from_brackets(g, eta, [p2, p3]).eta_const == frame.eta_const


def test_frame_reload(a3, a3_eta):
    frame = solve_flat(a3, a3_eta)
    brackets = [frame.bracket(a) for a in range(3)]
    again = frame_from_brackets(a3, a3_eta, brackets)
    assert again.coords == frame.coords
    assert again.eta_const == frame.eta_const


def test_wrong_bracket_is_rejected(a3, a3_eta):
    p2, p3, p4 = a3.generator_ring.gens()
    with pytest.raises((InconsistencyError, ValueError)):
        frame_from_brackets(a3, a3_eta, [p2, p3, p4])


def test_e6_ansatz_layout(e6, e6_tables):
    _, eta = e6_tables
    system = flat_ansatz(e6, eta)
    names = [u.name for u in system.unknowns]
    assert names == ["k{}".format(i) for i in range(1, 10)]
    assert [e6.degrees[u.coordinate] for u in system.unknowns] == [6, 8, 8, 9, 12, 12, 12, 12, 12]
    # k2 multiplies u6*u2, k3 multiplies u2^4
    assert system.unknowns[1].monomial == (1, 0, 1, 0, 0, 0)
    assert system.unknowns[2].monomial == (4, 0, 0, 0, 0, 0)
    assert [u.name for u in system.unknowns_of(5)] == ["k5", "k6", "k7", "k8", "k9"]
    assert system.unknowns_of(1) == []
    assert all(not eq.is_zero() for eq in system.equations)


def test_e6_frame(e6, e6_tables):
    _, eta = e6_tables
    frame = solve_flat(e6, eta)
    assert dict(frame.unknowns) == E6_UNKNOWNS
    assert frame.antidiagonal == 24
    assert frame.scale_factors == (1, 1, 1, MPQ(3, 16), MPQ(1, 7), 1)
    u2, u5, u6, u8, u9, u12 = e6.generator_ring.gens()
    assert frame.coords[2] == u6 - 15 * u2 ** 3
    assert frame.bracket(4) == u9 - u5 * u2 ** 2 * MPQ(42, 5)

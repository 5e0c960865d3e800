"""
@file test_potential.py
@Description: Hessian assembly, integration of the potential and the verification suite
@Author: Saito SDK developers
Copyright 2024
"""
import pytest

from saito_sdk.errors import InconsistencyError, IntegrabilityError
from saito_sdk.exactla import RatMatrix
from saito_sdk.potential import (
    Potential,
    VerificationReport,
    eta_factor_of,
    format_reports,
    hessian_from_g,
    integrate_potential,
    intersection_form_check,
    structure_constants,
    verify_euler,
    verify_eta_constant,
    verify_wdvv,
)
from saito_sdk.saito import MetricTable
from saito_sdk.utils import MPQ


def a2_potential(g):
    t2, t3 = g.flat_ring.gens()
    return t3 ** 2 * t2 * MPQ(1, 6) + t2 ** 4 * MPQ(1, 24)


def a3_potential(g):
    t2, t3, t4 = g.flat_ring.gens()
    return (
        t4 ** 2 * t2 * MPQ(1, 8)
        + t4 * t3 ** 2 * MPQ(1, 8)
        + t3 ** 2 * t2 ** 2 * MPQ(1, 16)
        + t2 ** 5 * MPQ(1, 240)
    )


def _hessian(F):
    n = F.ring.nvars
    return [[F.diff(a).diff(b) for b in range(n)] for a in range(n)]


def test_integrate_a2(a2):
    F = a2_potential(a2)
    P = integrate_potential(_hessian(F), a2.weights, a2)
    assert P.F == F
    assert P.unity_index == 1


def test_integrate_a3_records_eta_factor(a3):
    F = a3_potential(a3)
    eta_const = RatMatrix.from_rows([[0, 0, 8], [0, 8, 0], [8, 0, 0]])
    P = integrate_potential(_hessian(F), a3.weights, a3, eta_const=eta_const)
    assert P.F == F
    assert P.eta_factor == 2
    assert P.eta_lower() == RatMatrix.from_rows([[0, 0, MPQ(1, 4)], [0, MPQ(1, 4), 0], [MPQ(1, 4), 0, 0]])


def test_non_integrable_hessian(a2):
    t2, t3 = a2.flat_ring.gens()
    H = [[t2 ** 2 * MPQ(1, 2), t3], [t3, t2 * MPQ(1, 3)]]
    with pytest.raises(IntegrabilityError):
        integrate_potential(H, a2.weights, a2)


def a2_flat_metric(a2):
    t2, t3 = a2.flat_ring.gens()
    return MetricTable(a2, "g", ((t2 * 4, t3 * 6), (t3 * 6, t2 ** 2 * 12)), a2.flat_ring)


A2_ETA = RatMatrix.from_rows([[0, 6], [6, 0]])


def test_hessian_from_flat_metric(a2):
    gft = a2_flat_metric(a2)
    H = hessian_from_g(gft, A2_ETA)
    assert [list(row) for row in H] == _hessian(a2_potential(a2))


def test_verification_of_a3(a3):
    P = Potential(a3, a3_potential(a3), a3.weights, 2)
    assert verify_eta_constant(P).passed
    assert verify_euler(P).passed
    assert verify_wdvv(P, trials=10).passed
    assert verify_wdvv(P, symbolic=True).passed
    sc = structure_constants(P)
    assert sc.c[2][1][1] == 1


def test_wdvv_detects_a_wrong_coefficient(a3):
    t2, t3, _ = a3.flat_ring.gens()
    F = a3_potential(a3) + t3 ** 2 * t2 ** 2 * MPQ(1, 16)
    P = Potential(a3, F, a3.weights, 2)
    assert verify_eta_constant(P).passed
    assert verify_euler(P).passed
    report = verify_wdvv(P, trials=5)
    assert not report.passed
    assert "point" in report.details
    assert not verify_wdvv(P, symbolic=True).passed


def test_wdvv_vacuous_in_rank_two(a2):
    P = Potential(a2, a2_potential(a2), a2.weights, 1)
    report = verify_wdvv(P)
    assert report.passed
    assert "vacuous" in report.message


def test_eta_constant_failure(a3):
    t2, t3, t4 = a3.flat_ring.gens()
    F = a3_potential(a3) + t4 * t3 ** 2 * MPQ(1, 8)
    report = verify_eta_constant(Potential(a3, F, a3.weights, 2))
    assert not report.passed


def test_potential_must_be_homogeneous(a3):
    t2, _, _ = a3.flat_ring.gens()
    with pytest.raises(InconsistencyError):
        Potential(a3, a3_potential(a3) + t2, a3.weights, 2)


def test_report_format():
    reports = [VerificationReport("euler", True), VerificationReport("wdvv", False, "quadruple fails")]
    assert format_reports(reports) == "PASS euler\nFAIL wdvv: quadruple fails"
    assert VerificationReport("eta-constant", True, "antidiagonal 1/4").format() == "PASS eta-constant: antidiagonal 1/4"


def test_intersection_form_round_trip(a2):
    P = Potential(a2, a2_potential(a2), a2.weights, 1)
    assert intersection_form_check(P, a2_flat_metric(a2), A2_ETA).passed
    assert eta_factor_of(P, A2_ETA) == 2


def test_intersection_form_mismatch(a2):
    t2, _ = a2.flat_ring.gens()
    P = Potential(a2, a2_potential(a2) + t2 ** 4 * MPQ(1, 24), a2.weights, 1)
    report = intersection_form_check(P, a2_flat_metric(a2), A2_ETA)
    assert not report.passed
    assert "(3, 3)" in report.message


def test_symbolic_wdvv_on_e6(e6_potential):
    P = e6_potential
    assert verify_eta_constant(P).passed
    assert verify_euler(P).passed
    assert verify_wdvv(P, symbolic=True).passed


def test_symbolic_wdvv_rejects_a_perturbed_e6_coefficient(e6, e6_potential):
    P = e6_potential
    t2, t8 = e6.flat_ring.gen(0), e6.flat_ring.gen(3)
    assert P.F.coefficient((1, 0, 0, 3, 0, 0)) == MPQ(8, 15)
    # 8/15 -> 1 on t8^3*t2
    F = P.F + t8 ** 3 * t2 * MPQ(7, 15)
    assert F.coefficient((1, 0, 0, 3, 0, 0)) == 1
    perturbed = Potential(e6, F, e6.weights, P.unity_index)
    assert verify_euler(perturbed).passed
    assert not verify_wdvv(perturbed, symbolic=True).passed

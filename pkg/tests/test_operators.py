import numpy as np
import pytest

from qconfluence.domain import LogPoint
from qconfluence.operators import (FactoredDifferentialOperator,
                                   FactoredQOperator, OperatorError,
                                   ResonanceError, SeriesQCoefficient,
                                   build_companion, check_nonresonance,
                                   formal_gauge, gauge_residual)
from qconfluence.registry import get_example
from qconfluence.series import LaurentSeries

RNG = np.random.RandomState(7005)


def series_coeff(terms, order=40):
    return SeriesQCoefficient(LaurentSeries.from_terms(terms, order))


def independent_gauge_residual(gauge, op, order):
    """Re-derive sigma_q(G) D - C G coefficientwise with raw series ops only."""
    q = gauge.q
    m = gauge.size
    gs = [c.series(gauge.order) for c in op.coeffs]
    worst = 0.0
    for j in range(m):
        for k in range(j, m):
            vk, tk = gauge.diagonal_data[k]
            g_jk = gauge.entry(j, k)
            left = g_jk.scale_argument(q).scalar(tk).multiply(
                LaurentSeries.from_terms([(vk, 1.0)], gauge.order + abs(vk) + 2))
            right = gs[j].multiply(g_jk)
            if k > j:
                right = right.add(gauge.entry(j + 1, k).scalar(q - 1.0))
            diff = left.subtract(right)
            scale = max([abs(c) for _, c in left.items()] + [1.0])
            for e, c in diff.items():
                if e < order:
                    worst = max(worst, abs(c) / scale)
    return worst


# -- construction invariants -------------------------------------------------

def test_differential_operator_valuation_ordering_enforced():
    good = FactoredDifferentialOperator((
        LaurentSeries.from_terms([(-2, 1.0)]),
        LaurentSeries.from_terms([(-1, 1.0)]),
        LaurentSeries.zero(),
    ))
    assert good.order == 3
    with pytest.raises(OperatorError):
        FactoredDifferentialOperator((
            LaurentSeries.from_terms([(-1, 1.0)]),
            LaurentSeries.from_terms([(-2, 1.0)]),
        ))
    with pytest.raises(OperatorError):   # two zero coefficients tie at +inf
        FactoredDifferentialOperator((LaurentSeries.zero(), LaurentSeries.zero()))
    with pytest.raises(OperatorError):   # next-to-last must be polar
        FactoredDifferentialOperator((
            LaurentSeries.from_terms([(0, 1.0)]),
            LaurentSeries.from_terms([(1, 1.0)]),
        ))


def test_companion_structures():
    op1 = FactoredDifferentialOperator((LaurentSeries.zero(),))
    c = build_companion(op1)
    assert c.size == 1 and c.evaluate(0, 0, LogPoint(1.0, 0.0)) == 0.0

    q = 1.3
    ex = get_example("sec3-m2")
    fams = ex.family(q, "registry")
    cq = build_companion(FactoredQOperator(tuple(fams), q))
    z = LogPoint(0.5, 0.2)
    assert cq.superdiagonal == pytest.approx(q - 1.0)
    zc = z.to_complex()
    expected = 1.0 / (1.0 + (q - 1.0) / q / zc)
    assert cq.evaluate(0, 0, z) == pytest.approx(expected, rel=1e-13)
    assert cq.evaluate(1, 1, z) == 1.0
    assert cq.evaluate(1, 0, z) == 0.0

    ex43 = get_example("sec43")
    c3 = build_companion(FactoredQOperator(tuple(ex43.family(q, "registry")), q))
    assert c3.size == 3
    for j in range(3):
        for k in range(3):
            kind = c3.entry_structure(j, k)
            assert kind == ("diagonal" if j == k else
                            "superdiagonal" if k == j + 1 else "zero")


# -- non-resonance ------------------------------------------------------------

def test_nonresonance_vacuous_when_valuations_distinct():
    q = 1.2
    ex = get_example("sec43")
    rep = check_nonresonance(FactoredQOperator(tuple(ex.family(q, "registry")), q))
    assert rep.passed and rep.vacuous


def test_nonresonance_detects_integer_witness():
    q = 1.3
    op = FactoredQOperator((
        series_coeff([(0, q ** 2), (1, 1.0)]),
        series_coeff([(0, 1.0), (1, 2.0)]),
    ), q)
    rep = check_nonresonance(op)
    assert not rep.passed
    j, k, n, ratio = rep.failures[0]
    assert (j, k, n) == (1, 2, 2)


def test_nonresonance_irrational_ratio_passes():
    q = 2.0
    op = FactoredQOperator((
        series_coeff([(0, 3.0), (1, 1.0)]),
        series_coeff([(0, 1.0), (1, 2.0)]),
    ), q, q_validity=(1.0, 2.0))
    rep = check_nonresonance(op)
    assert rep.passed and not rep.vacuous


# -- formal gauge --------------------------------------------------------------

def test_gauge_order_one_unit_constant_term():
    q = 1.4
    op = FactoredQOperator((series_coeff([(0, 1.0), (1, 0.7)]),), q)
    g = formal_gauge(op, order=10)
    entry = g.entry(0, 0)
    assert entry.coefficient(0) == pytest.approx(1.0)
    assert gauge_residual(g, op) < 1e-14


def test_gauge_residual_worked_example_m2():
    ex = get_example("sec3-m2")
    q = 1.3
    op = FactoredQOperator(tuple(ex.family(q, "registry")), q)
    g = formal_gauge(op, order=20)
    assert gauge_residual(g, op, order=20) < 1e-12
    assert independent_gauge_residual(g, op, 20) < 1e-12


def test_gauge_residual_order3_registry():
    ex = get_example("sec43")
    q = 1.3
    op = FactoredQOperator(tuple(ex.family(q, "registry")), q)
    g = formal_gauge(op, order=20)
    assert independent_gauge_residual(g, op, 20) < 1e-12


def test_gauge_valuation_prediction_nondecreasing_case():
    # valuations (-2, -1, 0): the closed formula -sum v_l applies
    q = 1.25
    op = FactoredQOperator((
        series_coeff([(-2, 3.0), (-1, 0.5), (0, 0.1)]),
        series_coeff([(-1, 2.0), (0, 0.3)]),
        series_coeff([(0, 1.0), (1, 0.2)]),
    ), q)
    g = formal_gauge(op, order=14)
    assert g.predicted_valuation(0, 2) == 3
    assert g.entry(0, 2).min_exponent == 3
    assert g.predicted_valuation(0, 1) == 2
    assert g.predicted_valuation(1, 2) == 1
    assert independent_gauge_residual(g, op, 12) < 1e-12


def test_gauge_randomized_small_operators():
    for trial in range(4):
        q = 1.15 + 0.3 * RNG.random()
        vals = sorted(RNG.choice([-2, -1, 0], size=3, replace=False))
        coeffs = []
        for v in vals:
            terms = [(v, complex(1.0 + RNG.random(), RNG.randn() * 0.3))]
            terms += [(v + i, complex(RNG.randn(), RNG.randn()) * 0.4)
                      for i in range(1, 4)]
            coeffs.append(series_coeff(terms))
        op = FactoredQOperator(tuple(coeffs), q)
        g = formal_gauge(op, order=14)
        assert independent_gauge_residual(g, op, 12) < 1e-12


def test_gauge_deterministic_reruns():
    ex = get_example("sec43")
    q = 1.2
    op = FactoredQOperator(tuple(ex.family(q, "registry")), q)
    g1 = formal_gauge(op, order=14)
    g2 = formal_gauge(op, order=18)
    for jk in ((0, 0), (0, 1), (1, 2), (0, 2)):
        a = g1.entry(*jk)
        for e, c in a.items():
            assert g2.entry(*jk).coefficient(e) == c  # forced linear solves


def test_gauge_resonant_operator_rejected():
    q = 1.3
    op = FactoredQOperator((
        series_coeff([(0, q ** 2), (1, 1.0)]),
        series_coeff([(0, 1.0), (1, 2.0)]),
    ), q)
    with pytest.raises(ResonanceError):
        formal_gauge(op, order=8)


def test_q_operator_validity_window():
    ex = get_example("sec3-m2")
    with pytest.raises(OperatorError):
        FactoredQOperator(tuple(ex.family(1.2, "registry")), 1.2, (1.0, 1.1))


def test_slopes_exposed():
    q = 1.2
    ex = get_example("sec43")
    op = FactoredQOperator(tuple(ex.family(q, "registry")), q)
    assert op.slopes() == [-2, -1, 0]

import cmath
import math

import numpy as np
import pytest

from qconfluence.deformation import (DeformationError, combine,
                                     deform_nonpositive, deform_positive)
from qconfluence.domain import LogPoint
from qconfluence.qfunctions import qexp_entire
from qconfluence.quadrature import IntegrandFn, q_laplace_discrete
from qconfluence.registry import get_example
from qconfluence.series import LaurentSeries, RationalLaurent, q_borel

RNG = np.random.RandomState(7007)


def sec43_op():
    return get_example("sec43").diff_op


def hand_nonpos_sec43(q):
    """The two recursion steps done by hand, as plain complex functions."""
    def g3(z):
        return 1.0

    def g2(z):
        return 1.0 / (q * (1.0 + (q - 1.0) * (1.0 / z - 1.0)))

    def g1(z):
        return g2(z) / (q * (1.0 + (q - 1.0) * (-1.0 / z + 2.0 / z ** 2 - 1.0)))

    return g1, g2, g3


def test_nonpositive_recursion_matches_hand_derivation():
    q = 1.17
    rats = deform_nonpositive(sec43_op(), q)
    hands = hand_nonpos_sec43(q)
    for _ in range(20):
        z = (0.2 + 2.0 * RNG.random()) * cmath.exp(1j * math.pi * (2 * RNG.random() - 1))
        for rat, hand in zip(rats, hands):
            assert abs(rat.evaluate(z) - hand(z)) <= 1e-12 * max(1.0, abs(hand(z)))


def test_recursion_residual_as_rational_functions():
    q = 1.3
    op = sec43_op()
    rats = deform_nonpositive(op, q)
    for j in range(op.order - 1):
        for _ in range(20):
            z = (0.1 + 3.0 * RNG.random()) * cmath.exp(1j * math.pi * (2 * RNG.random() - 1))
            lhs = rats[j + 1].evaluate(z) / (q * rats[j].evaluate(z))
            lo_next = op.nonpositive_part(j + 1).evaluate(z)
            lo_this = op.nonpositive_part(j).evaluate(z)
            rhs = 1.0 + (q - 1.0) * (lo_next - lo_this - 1.0)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_m2_limit_is_summed_coefficient():
    # The pointwise limit of f_1 is the summed coefficient -1/z; the
    # deviation is first order in q-1 (the expansion gives
    # (q-1)(a^2 - a + 1) with a = 1/z, |.| = 3.61 at z = i/2), so the
    # sensible assertions are the O(q-1) size and the halving rate.
    op = get_example("sec3-m2").diff_op
    z = 0.5j
    errs = []
    for q in (1.002, 1.001):
        rats = deform_nonpositive(op, q)
        f1 = (rats[0].evaluate(z) - 1.0) / (q - 1.0)
        errs.append(abs(f1 - (-1.0 / z)))
    assert errs[1] < 5e-3
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_pointwise_coefficient_confluence_both_routes():
    ex = get_example("sec43")
    op = ex.diff_op
    grid = [LogPoint(r, a) for r in (0.5, 0.9) for a in (-0.2, 0.1)]
    for route in ("registry", "eq17"):
        errs = []
        for q in (1.2, 1.1, 1.05, 1.01):
            fams = ex.family(q, route)
            worst = 0.0
            for z in grid:
                zc = z.to_complex()
                for j in range(op.order):
                    target = op.coeffs[j].evaluate(zc)
                    worst = max(worst, abs(fams[j].evaluate_f(z) - target))
            errs.append(worst)
        assert errs[0] > errs[1] > errs[2] > errs[3]


def test_routes_differ_but_agree_in_the_limit():
    ex = get_example("sec43")
    q = 1.2
    a = ex.family(q, "registry")[0]
    b = ex.family(q, "eq17")[0]
    z = LogPoint(0.8, 0.1)
    assert abs(a.evaluate_g(z) - b.evaluate_g(z)) > 1e-6   # different families


def test_deform_positive_trivial_and_linear():
    zero = deform_positive(LaurentSeries.zero(), [], 1.3)
    assert zero.evaluate_f(LogPoint(0.4, 0.1)) == 0.0
    lin = LaurentSeries.from_terms([(1, 1.0)])
    for q in (1.5, 1.05):
        part = deform_positive(lin, [(lin, 1, None)], q)
        z = LogPoint(0.3, 0.2)
        assert part.evaluate_f(z) == pytest.approx(z.to_complex(), rel=1e-12)


def test_deform_positive_component_sum_checked():
    lin = LaurentSeries.from_terms([(1, 1.0)])
    wrong = LaurentSeries.from_terms([(1, 0.5)])
    with pytest.raises(DeformationError):
        deform_positive(lin, [(wrong, 1, None)], 1.3)


def test_deform_positive_divergent_needs_image():
    ex = get_example("euler")
    with pytest.raises(DeformationError):
        deform_positive(ex.series, [(ex.series, 1, None)], 1.2)


def test_euler_component_two_routes_agree():
    # the deformed series is convergent at fixed q (the q-weights regularize
    # the factorials, radius ~ 1-p): inside that disk its direct sum must
    # agree with the q-Laplace of the continued Borel image log(1+zeta)
    ex = get_example("euler")
    q = 1.5
    z = LogPoint(0.1, 0.0)
    from qconfluence.series import q_borel_deform_coeffs
    deformed = q_borel_deform_coeffs(ex.series, 1, q)
    route_series = deformed.evaluate(z.to_complex())
    route_laplace = q_laplace_discrete(
        IntegrandFn(ex.borel_image.g), z, 1, q, tol=1e-15)
    assert abs(route_series - route_laplace) < 1e-9

    part = deform_positive(ex.series, [(ex.series, 1, ex.borel_image)], q)
    assert part.evaluate_f(z) == pytest.approx(route_laplace, abs=1e-12)


def test_combine_trivial():
    fam = combine(None, RationalLaurent.constant(1.0), 1.3, "trivial")
    z = LogPoint(0.7, 0.4)
    assert fam.evaluate_g(z) == 1.0
    assert fam.evaluate_f(z) == 0.0


def test_registry_families_satisfy_qexp_sigma_identities():
    q = 1.15
    z = LogPoint(0.6, 0.5)
    zc = z.to_complex()

    m2 = get_example("sec3-m2").family(q, "registry")
    lhs = qexp_entire(1.0 / (q * zc), q)          # sigma_q e_q(1/z)
    rhs = m2[0].evaluate_g(z) * qexp_entire(1.0 / zc, q)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)

    m3 = get_example("sec43").family(q, "registry")
    lhs = qexp_entire(1.0 / (q * zc) ** 2, q * q)  # sigma_q e_{q^2}(1/z^2)
    rhs = m3[0].evaluate_g(z) * qexp_entire(1.0 / zc ** 2, q * q)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_vanishing_denominator_constant_reported():
    # constant terms 3 and 0: 1+(q-1)(0-3-1) = 0 at q = 1.25
    op = FactoredDifferentialOperatorWithConstants()
    with pytest.raises(DeformationError, match="critical q"):
        deform_nonpositive(op, 1.25)


def FactoredDifferentialOperatorWithConstants():
    from qconfluence.operators import FactoredDifferentialOperator
    return FactoredDifferentialOperator((
        LaurentSeries.from_terms([(-1, -1.0), (0, 3.0)]),
        LaurentSeries.from_terms([(0, 0.0), (1, 1.0)]),
    ))


def test_series_route_of_family_matches_evaluator():
    ex = get_example("sec43")
    q = 1.2
    for fam in ex.family(q, "eq17"):
        s = fam.series(12)
        # compare the series expansion against direct evaluation at small z
        z = LogPoint(5e-3, 0.3)
        direct = fam.evaluate_g(z)
        approx = s.evaluate(z.to_complex())
        assert abs(direct - approx) <= 1e-8 * max(1.0, abs(direct))

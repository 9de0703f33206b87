import math

import numpy as np
import pytest

from qconfluence.series import (INFINITE_VALUATION, LaurentPolynomial,
                                LaurentSeries, RationalLaurent, SeriesError,
                                formal_borel, leading, q_borel,
                                q_borel_deform_coeffs, split_parts, valuation)

RNG = np.random.RandomState(7002)


def rand_series(min_e=-3, max_e=6, order=24):
    terms = [(e, complex(RNG.randn(), RNG.randn()))
             for e in range(min_e, max_e) if RNG.random() < 0.7]
    return LaurentSeries.from_terms(terms, order)


def test_valuation_and_leading_examples():
    s = LaurentSeries.from_terms([(-2, -2.0), (1, 1.0)])
    assert valuation(s) == -2
    assert leading(s) == -2.0
    z = LaurentSeries.zero()
    assert valuation(z) == INFINITE_VALUATION
    assert leading(z) == 0.0
    s2 = LaurentSeries.from_terms([(0, 3.0), (5, 1.0)])
    assert valuation(s2) == 0 and leading(s2) == 3.0


def test_valuation_sentinel_orders_after_finite():
    assert valuation(LaurentSeries.zero()) > valuation(rand_series())


def test_invert_geometric():
    s = LaurentSeries.from_terms([(0, 1.0), (1, 1.0)], 12)
    inv = s.invert()
    for n in range(10):
        assert inv.coefficient(n) == pytest.approx((-1.0) ** n)


def test_invert_times_self_is_one():
    for _ in range(20):
        s = rand_series()
        if s.is_zero:
            continue
        inv = s.invert()
        prod = s.multiply(inv)
        scale = max(abs(c) for _, c in inv.items()) * max(abs(c) for _, c in s.items())
        assert prod.coefficient(0) == pytest.approx(1.0, abs=1e-12 * max(1.0, scale))
        for e, c in prod.items():
            if e != 0:
                assert abs(c) < 1e-12 * max(1.0, scale)


def test_invert_zero_rejected():
    with pytest.raises(SeriesError):
        LaurentSeries.zero().invert()


def test_scale_argument_sigma_action():
    s = LaurentSeries.from_terms([(-1, 1.0), (1, 1.0)])
    out = s.scale_argument(2.0)
    assert out.coefficient(-1) == pytest.approx(0.5)
    assert out.coefficient(1) == pytest.approx(2.0)


def test_split_examples():
    s = LaurentSeries.from_terms([(-2, -2.0)])
    lo, hi = split_parts(s)
    assert lo.items() == [(-2, -2.0)] and hi.is_zero

    s = LaurentSeries.from_terms([(-1, 1.0), (0, 3.0), (2, 1.0)])
    lo, hi = split_parts(s)
    assert lo.items() == [(-1, 1.0), (0, 3.0)]
    assert hi.items() == [(2, 1.0)]

    lo, hi = split_parts(LaurentSeries.zero())
    assert lo.is_zero and hi.is_zero


def test_split_then_add_reconstructs_exactly():
    for _ in range(30):
        s = rand_series()
        lo, hi = split_parts(s)
        assert lo.add(hi).items() == s.items()


def test_truncation_is_tracked_not_zeroed():
    s = LaurentSeries.from_terms([(0, 1.0)], 8)
    with pytest.raises(SeriesError):
        s.coefficient(9)
    t = rand_series(order=10).multiply(rand_series(order=20))
    assert t.truncation_order <= 10 + 6  # min-rule with valuation shifts


def test_formal_borel_euler_series():
    # oracle: n!/Gamma(n+2) = 1/(n+1) by hand
    terms, fact = [], 1.0
    for n in range(12):
        terms.append((n + 1, (-1.0) ** n * fact))
        fact *= n + 1
    b = formal_borel(LaurentSeries.from_terms(terms, 16), 1)
    for n in range(12):
        assert b.coefficient(n + 1) == pytest.approx((-1.0) ** n / (n + 1), rel=1e-12)


def test_formal_borel_constants_and_level():
    one = LaurentSeries.from_terms([(0, 1.0)])
    assert formal_borel(one, 3).items() == [(0, 1.0)]
    z2 = LaurentSeries.from_terms([(2, 1.0)])
    assert formal_borel(z2, 2).coefficient(2) == pytest.approx(1.0)  # Gamma(2)=1


def test_formal_borel_kN_coefficient():
    for k in (1, 2, 3):
        for N in (1, 2, 4):
            s = LaurentSeries.from_terms([(k * N, 1.0)], k * N + 2)
            out = formal_borel(s, k)
            assert out.coefficient(k * N) == pytest.approx(1.0 / math.factorial(N), rel=1e-12)


def test_formal_borel_linear():
    a, b = rand_series(0, 8), rand_series(0, 8)
    lhs = formal_borel(a.add(b), 2)
    rhs = formal_borel(a, 2).add(formal_borel(b, 2))
    for e, c in rhs.items():
        assert lhs.coefficient(e) == pytest.approx(c, rel=1e-12)


def test_formal_borel_rejects_poles():
    with pytest.raises(SeriesError):
        formal_borel(LaurentSeries.from_terms([(-1, 1.0)]), 1)


def test_q_borel_deform_examples():
    assert q_borel_deform_coeffs(LaurentSeries.zero(), 1, 1.7).is_zero
    z = LaurentSeries.from_terms([(1, 1.0)])
    out = q_borel_deform_coeffs(z, 1, 1.3)
    assert out.coefficient(1) == pytest.approx(1.0, rel=1e-12)   # Gamma_p(2) = 1
    z2 = LaurentSeries.from_terms([(2, 1.0)])
    out = q_borel_deform_coeffs(z2, 1, 2.0)
    assert out.coefficient(2) == pytest.approx(0.75, rel=1e-12)  # (1+p)/2, p=1/2


def test_q_borel_deform_requires_positive_part():
    with pytest.raises(SeriesError):
        q_borel_deform_coeffs(LaurentSeries.from_terms([(0, 1.0)]), 1, 1.5)


def test_q_borel_inverts_deformation_to_classical_borel():
    s = rand_series(1, 12)
    for q in (1.5, 1.1):
        for level in (1, 2):
            deformed = q_borel_deform_coeffs(s, level, q)
            lhs = q_borel(deformed, level, q)
            rhs = formal_borel(s, level)
            for e, c in rhs.items():
                assert lhs.coefficient(e) == pytest.approx(c, rel=1e-12)


def test_q_borel_deform_coefficientwise_confluence():
    s = rand_series(1, 21)
    errors = []
    for q in (1.2, 1.05, 1.01):
        d = q_borel_deform_coeffs(s, 1, q)
        errors.append(max(abs(d.coefficient(e) - c) for e, c in s.items()))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.5 * errors[0]


def test_rational_laurent_round_trip():
    num = LaurentPolynomial.from_dict({0: 1.0})
    den = LaurentPolynomial.from_dict({0: 1.0, -2: 0.3})
    rat = RationalLaurent(num, den)
    z = 0.7 + 0.2j
    assert rat.evaluate(z) == pytest.approx(1.0 / (1.0 + 0.3 * z ** -2))
    assert rat.valuation() == 2
    assert rat.limit_at_infinity() == pytest.approx(1.0)
    series = rat.to_series(12)
    assert series.coefficient(2) == pytest.approx(1.0 / 0.3)


def test_rational_divide_and_poles():
    a = RationalLaurent.constant(2.0)
    b = RationalLaurent(LaurentPolynomial.from_dict({0: 1.0, -1: 1.0}),
                        LaurentPolynomial.constant(1.0))
    r = a.divide(b)
    assert r.evaluate(2.0) == pytest.approx(2.0 / 1.5)
    with pytest.raises(ZeroDivisionError):
        r.evaluate(-1.0)

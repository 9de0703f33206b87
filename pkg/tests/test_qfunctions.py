import cmath
import math

import numpy as np
import pytest

from qconfluence.domain import LogPoint
from qconfluence.qfunctions import (EvaluationOverflow, PoleProximityError,
                                    QExponentialEvaluator, ThetaEvaluator,
                                    gamma, gamma_p, qexp, qexp_disk,
                                    qexp_entire, theta, theta_argument_bound)

RNG = np.random.RandomState(7003)

# frozen by the independent direct sums below (see test_theta_frozen_value)
THETA_1_Q2 = 3.2832651213103077
E2_AT_1 = 2.3842310290313713


def direct_theta(z: complex, q: float, L: int = 80) -> complex:
    total = 0.0 + 0.0j
    for l in range(-L, L + 1):
        total += q ** (-l * (l + 1) / 2.0) * z ** l
    return total


def test_theta_frozen_value():
    ref = direct_theta(1.0 + 0j, 2.0)
    assert ref == pytest.approx(THETA_1_Q2, rel=1e-15)
    assert theta(1.0, 2.0) == pytest.approx(THETA_1_Q2, rel=1e-12)


def test_theta_functional_equation_random():
    for q in (1.1, 1.5, 2.0):
        cap = 0.9 * theta_argument_bound(q, 1e-12)
        for _ in range(25):
            z = (0.4 + 1.2 * RNG.random()) * cmath.exp(1j * cap * (2 * RNG.random() - 1))
            lhs = theta(q * z, q)
            rhs = z * theta(z, q)
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_theta_vanishes_at_minus_one():
    # terms l and -l-1 cancel in pairs
    for q in (1.3, 2.0):
        ev = ThetaEvaluator(q)
        val = ev.theta(-1.0 + 0j)
        scale = abs(ev.theta(1.0 + 0j))
        assert abs(val) < 1e-12 * scale


def test_theta_overflow_reported():
    with pytest.raises(EvaluationOverflow):
        theta(1e220, 1.05)


def test_lambda_identity_subscript_one():
    ev = ThetaEvaluator(1.4)
    assert ev.lambda_qa(LogPoint(0.8, 0.3), 1.0) == 1.0


def test_lambda_functional_equation():
    for q in (1.2, 1.7):
        ev = ThetaEvaluator(q)
        for _ in range(10):
            z = (0.5 + RNG.random()) * cmath.exp(0.2j * RNG.randn())
            a = cmath.exp(complex(0.2 * RNG.randn(), 0.05 * RNG.randn()))
            lhs = ev.lambda_qa(q * z, a)
            rhs = a * ev.lambda_qa(z, a)
            assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_lambda_confluence_to_power():
    # Lambda_{q, 1+(q-1)c}(z) -> z^c as q -> 1 (principal sheet)
    z = 0.9 * cmath.exp(0.1j * math.pi)
    c = 0.7 - 0.2j
    errs = []
    for q in (1.2, 1.1, 1.05):
        val = ThetaEvaluator(q).lambda_qa(z, 1.0 + (q - 1.0) * c)
        errs.append(abs(val - z ** c))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05


def test_lq_functional_equation():
    for q in (1.3, 2.0):
        ev = ThetaEvaluator(q)
        for _ in range(10):
            z = (0.5 + RNG.random()) * cmath.exp(0.3j * RNG.randn())
            assert ev.l_q(q * z) - ev.l_q(z) == pytest.approx(1.0, abs=1e-12)


def test_lambda_pole_proximity_reported():
    q = 1.5
    ev = ThetaEvaluator(q)
    a = 2.0
    bad = -a * q ** 3 * (1.0 + 1e-10)
    with pytest.raises(PoleProximityError):
        ev.lambda_qa(bad, a)


def test_qexp_at_zero_and_zero_spiral():
    assert qexp(0.0, 1.7) == 1.0
    assert qexp(0.0, 0.7) == 1.0
    q = 2.0
    for n in (1, 2, 3):
        z = q ** n / (1.0 - q)
        assert abs(qexp_entire(z, q)) < 1e-10


def test_qexp_entire_frozen_product():
    prod = 1.0
    for k in range(1, 80):
        prod *= 1.0 + 2.0 ** -k
    assert prod == pytest.approx(E2_AT_1, rel=1e-15)
    assert qexp_entire(1.0, 2.0) == pytest.approx(E2_AT_1, rel=1e-12)


def test_qexp_functional_equation_random():
    for q in (1.05, 1.3, 2.0):
        for _ in range(15):
            z = complex(RNG.randn(), RNG.randn())
            lhs = qexp_entire(q * z, q)
            rhs = (1.0 + (q - 1.0) * z) * qexp_entire(z, q)
            assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), 1e-30)


def test_qexp_disk_matches_entire_reciprocal():
    # e_p(x) * e_q(-x) = 1 inside the disk
    q = 1.6
    p = 1.0 / q
    for _ in range(10):
        z = 0.8 * RNG.random() / (1.0 - p) * cmath.exp(2j * math.pi * RNG.random())
        val = qexp_disk(z, p) * qexp_entire(-z, q)
        assert val == pytest.approx(1.0, abs=1e-11)


def test_qexp_disk_radius_guard():
    p = 0.5
    with pytest.raises(ValueError):
        qexp_disk(1.9 / (1.0 - p), p)


def test_qexp_disk_majorized_on_disk():
    p = 0.6
    for _ in range(20):
        z = 0.85 / (1.0 - p) * RNG.random() * cmath.exp(2j * math.pi * RNG.random())
        assert abs(qexp_disk(z, p)) <= abs(qexp_disk(abs(z), p)) + 1e-12


def test_qexp_entire_vs_exp_on_positive_axis():
    for q in (1.2, 1.05):
        for x in (0.0, 0.5, 1.0, 2.0):
            assert qexp_entire(x, q).real <= math.exp(x) + 1e-12


def test_ep_uniform_convergence_to_exp():
    grid = [2.0 * cmath.exp(2j * math.pi * k / 24) * r
            for k in range(24) for r in (0.3, 0.7, 1.0)]
    sups = []
    for q in (1.2, 1.1, 1.05, 1.01):
        p = 1.0 / q
        sups.append(max(abs(qexp_disk(z, p) - cmath.exp(z)) for z in grid))
    assert sups[0] > sups[1] > sups[2] > sups[3]


def test_gamma_p_values_and_recurrence():
    assert gamma_p(1.0, 0.37) == pytest.approx(1.0, rel=1e-13)
    assert gamma_p(3.0, 0.5) == pytest.approx(1.5, rel=1e-13)
    for p in (0.3, 0.8):
        for x in (0.7, 2.5, 1.0 + 0.4j):
            lhs = gamma_p(x + 1.0, p)
            rhs = (1.0 - p ** x) / (1.0 - p) * gamma_p(x, p)
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_gamma_p_converges_to_gamma():
    target = gamma(2.5)
    errs = [abs(gamma_p(2.5, p) - target) for p in (0.9, 0.99, 0.999)]
    assert errs[0] > errs[1] > errs[2]


def test_gamma_poles_reported():
    with pytest.raises(PoleProximityError):
        gamma_p(0.0, 0.5)
    with pytest.raises(PoleProximityError):
        gamma(-2.0)


def test_mode_dispatch():
    assert QExponentialEvaluator(1.5).mode == "entire"
    assert QExponentialEvaluator(0.5).mode == "disk"
    with pytest.raises(ValueError):
        QExponentialEvaluator(1.0)

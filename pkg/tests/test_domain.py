import math

import numpy as np
import pytest

from qconfluence.domain import (DomainError, LogPoint, QParam, SectorDomain,
                                dilate, power, ramify)

RNG = np.random.RandomState(7001)


def test_power_principal_square_root():
    assert power(LogPoint(1.0, math.pi), 0.5) == pytest.approx(1j, abs=1e-15)


def test_power_next_sheet_distinguishes_surface():
    assert power(LogPoint(1.0, 2 * math.pi), 0.5) == pytest.approx(-1.0, abs=1e-15)


def test_power_positive_axis():
    assert power(LogPoint(math.e, 0.0), 2.0) == pytest.approx(math.e ** 2, rel=1e-14)


def test_power_additivity_random():
    for _ in range(60):
        z = LogPoint(0.2 + 2 * RNG.random(), -7 + 14 * RNG.random())
        a = complex(RNG.randn(), RNG.randn())
        b = complex(RNG.randn(), RNG.randn())
        lhs = power(z, a + b)
        rhs = power(z, a) * power(z, b)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_ramify_squares():
    z = ramify(2, LogPoint(1.5, 0.7))
    assert z.modulus == pytest.approx(2.25)
    assert z.argument == pytest.approx(1.4)


def test_ramify_composition_law_random():
    for _ in range(60):
        z = LogPoint(0.3 + RNG.random(), -5 + 10 * RNG.random())
        b = 0.25 + 2.5 * RNG.random()
        c = 0.25 + 2.5 * RNG.random()
        lhs = ramify(b, ramify(c, z))
        rhs = ramify(b * c, z)
        assert abs(lhs.modulus - rhs.modulus) <= 1e-12 * rhs.modulus
        assert abs(lhs.argument - rhs.argument) <= 1e-12 * max(1.0, abs(rhs.argument))


def test_ramify_inverse_pair():
    z = LogPoint(0.8, 2.1)
    back = ramify(0.5, ramify(2, z))
    assert back.modulus == pytest.approx(z.modulus, rel=1e-14)
    assert back.argument == pytest.approx(z.argument, rel=1e-14)


def test_ramify_third():
    z = ramify(3, LogPoint(1.0, math.pi / 3))
    assert z.argument == pytest.approx(math.pi)


def test_ramify_zero_rejected():
    with pytest.raises(ValueError):
        ramify(0.0, LogPoint(1.0, 0.0))


def test_dilate_examples_and_group_law():
    assert dilate(LogPoint(1.0, 0.0), 1, 2.0).modulus == pytest.approx(2.0)
    z = LogPoint(0.5, math.pi / 2)
    out = dilate(z, -2, 1.1)
    assert out.modulus == pytest.approx(0.5 / 1.21)
    assert out.argument == z.argument
    back = dilate(dilate(z, 3, 1.3), -3, 1.3)
    assert back.modulus == pytest.approx(z.modulus, rel=1e-14)


def test_sector_membership_monotone_under_contraction():
    for _ in range(40):
        d = -3 + 6 * RNG.random()
        sec = SectorDomain(d, 0.1 + 0.4 * RNG.random(), 0.5 + RNG.random())
        r = sec.radius * (0.2 + 0.7 * RNG.random())
        a = d + sec.half_width * (2 * RNG.random() - 1) * 0.95
        z = LogPoint(r, a)
        assert sec.contains(z)
        q = 1.0 + RNG.random()
        for N in (1, 3, 10):
            assert sec.contains(dilate(z, -N, q))


def test_sector_require_raises_outside():
    sec = SectorDomain(0.0, 0.2, 1.0)
    with pytest.raises(DomainError):
        sec.require(LogPoint(0.5, 1.0))


def test_qparam_invariants():
    qp = QParam(1.25)
    assert qp.p == pytest.approx(0.8)
    with pytest.raises(ValueError):
        QParam(1.0)
    with pytest.raises(ValueError):
        QParam(0.5)
    with pytest.raises(ValueError):
        QParam(complex(2.0, 0.5))


def test_logpoint_invariants():
    with pytest.raises(ValueError):
        LogPoint(0.0, 0.0)
    with pytest.raises(ValueError):
        LogPoint(-1.0, 0.0)
    # arguments differing by 2*pi are distinct values
    assert LogPoint(1.0, 0.0) != LogPoint(1.0, 2 * math.pi)

"""Truncated Laurent series and exact Laurent-polynomial rational functions.

A LaurentSeries stores coefficients for exponents in [min_exponent,
truncation_order); everything below min_exponent is known to vanish,
everything at or above truncation_order is *unknown* (not zero).  Keeping
the truncation explicit matters because the gauge recursion propagates it.

LaurentPolynomial / RationalLaurent are exact (no truncation): they carry
the finite polar data that the deformation recursion closes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

from scipy.special import gamma as _gamma

from .qfunctions import gamma_p

INFINITE_VALUATION = math.inf

DEFAULT_TRUNCATION = 64


class SeriesError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LaurentSeries:
    min_exponent: int
    coefficients: Tuple[complex, ...]
    truncation_order: int

    @staticmethod
    def from_terms(terms: Iterable[Tuple[int, complex]],
                   truncation_order: int = DEFAULT_TRUNCATION) -> "LaurentSeries":
        data: Dict[int, complex] = {}
        for expo, coeff in terms:
            if expo >= truncation_order:
                raise SeriesError(f"term z^{expo} at or beyond truncation {truncation_order}")
            data[int(expo)] = data.get(int(expo), 0.0) + complex(coeff)
        return LaurentSeries._normalized(data, truncation_order)

    @staticmethod
    def zero(truncation_order: int = DEFAULT_TRUNCATION) -> "LaurentSeries":
        return LaurentSeries(truncation_order, (), truncation_order)

    @staticmethod
    def one(truncation_order: int = DEFAULT_TRUNCATION) -> "LaurentSeries":
        return LaurentSeries.from_terms([(0, 1.0)], truncation_order)

    @staticmethod
    def _normalized(data: Dict[int, complex], truncation_order: int) -> "LaurentSeries":
        live = {e: c for e, c in data.items() if c != 0 and e < truncation_order}
        if not live:
            return LaurentSeries.zero(truncation_order)
        lo = min(live)
        hi = max(live)
        coeffs = tuple(live.get(e, 0.0) for e in range(lo, hi + 1))
        return LaurentSeries(lo, coeffs, truncation_order)

    # -- inspection ---------------------------------------------------------

    def coefficient(self, exponent: int) -> complex:
        if exponent >= self.truncation_order:
            raise SeriesError(f"coefficient of z^{exponent} is beyond the truncation")
        idx = exponent - self.min_exponent
        if 0 <= idx < len(self.coefficients):
            return self.coefficients[idx]
        return 0.0

    def items(self) -> List[Tuple[int, complex]]:
        return [(self.min_exponent + i, c)
                for i, c in enumerate(self.coefficients) if c != 0]

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (self.items() == other.items()
                and self.truncation_order == other.truncation_order)

    def __hash__(self):
        return hash((tuple(self.items()), self.truncation_order))

    def __repr__(self):
        if self.is_zero:
            return f"LaurentSeries(0 + O(z^{self.truncation_order}))"
        parts = " + ".join(f"({c:.6g})z^{e}" for e, c in self.items()[:6])
        return f"LaurentSeries({parts} + O(z^{self.truncation_order}))"

    # -- arithmetic ---------------------------------------------------------

    def add(self, other: "LaurentSeries") -> "LaurentSeries":
        order = min(self.truncation_order, other.truncation_order)
        data: Dict[int, complex] = {}
        for e, c in self.items() + other.items():
            if e < order:
                data[e] = data.get(e, 0.0) + c
        return LaurentSeries._normalized(data, order)

    def negate(self) -> "LaurentSeries":
        return LaurentSeries(self.min_exponent,
                             tuple(-c for c in self.coefficients),
                             self.truncation_order)

    def subtract(self, other: "LaurentSeries") -> "LaurentSeries":
        return self.add(other.negate())

    def scalar(self, factor: complex) -> "LaurentSeries":
        if factor == 0:
            return LaurentSeries.zero(self.truncation_order)
        return LaurentSeries(self.min_exponent,
                             tuple(factor * c for c in self.coefficients),
                             self.truncation_order)

    def multiply(self, other: "LaurentSeries") -> "LaurentSeries":
        if self.is_zero or other.is_zero:
            return LaurentSeries.zero(min(self.truncation_order, other.truncation_order))
        # product of the known windows is reliable up to the smaller of
        # v(other)+trunc(self) and v(self)+trunc(other)
        order = min(self.truncation_order + other.min_exponent,
                    other.truncation_order + self.min_exponent)
        data: Dict[int, complex] = {}
        for e1, c1 in self.items():
            for e2, c2 in other.items():
                e = e1 + e2
                if e < order:
                    data[e] = data.get(e, 0.0) + c1 * c2
        return LaurentSeries._normalized(data, order)

    def invert(self) -> "LaurentSeries":
        """Reciprocal series; needs a nonzero leading coefficient."""
        if self.is_zero:
            raise SeriesError("cannot invert the zero series")
        v = self.min_exponent
        lead = self.coefficients[0]
        # s = lead z^v (1 + u), v(u) >= 1 ; 1/s = z^{-v}/lead * sum (-u)^k
        n_known = self.truncation_order - v      # known coefficients of (1+u)
        tail = [self.coefficient(v + i) / lead for i in range(n_known)]
        inv = [0.0] * n_known
        inv[0] = 1.0
        for n in range(1, n_known):
            acc = 0.0 + 0.0j
            for i in range(1, n + 1):
                acc += tail[i] * inv[n - i]
            inv[n] = -acc
        data = {(-v + i): inv[i] / lead for i in range(n_known)}
        return LaurentSeries._normalized(data, -v + n_known)

    def scale_argument(self, factor: complex) -> "LaurentSeries":
        """z -> factor*z, i.e. coefficient of z^e picks up factor^e (sigma_q action)."""
        data = {e: c * complex(factor) ** e for e, c in self.items()}
        return LaurentSeries._normalized(data, self.truncation_order)

    def truncate(self, order: int) -> "LaurentSeries":
        order = min(order, self.truncation_order)
        return LaurentSeries._normalized(dict(self.items()), order)

    def evaluate(self, z: complex) -> complex:
        return sum(c * complex(z) ** e for e, c in self.items())


def valuation(s: LaurentSeries) -> float:
    """z-valuation; the zero series reports +inf."""
    return INFINITE_VALUATION if s.is_zero else float(s.min_exponent)


def leading(s: LaurentSeries) -> complex:
    """Leading coefficient t_0; by convention t_0(0) = 0."""
    return 0.0 if s.is_zero else s.coefficients[0]


def split_parts(s: LaurentSeries) -> Tuple[LaurentSeries, LaurentSeries]:
    """(exponents <= 0, exponents >= 1); the two parts add back to s exactly.

    The nonpositive part is a finite Laurent polynomial, so its positive
    coefficients are known zeros and it keeps the full truncation order.
    """
    lo = {e: c for e, c in s.items() if e <= 0}
    hi = {e: c for e, c in s.items() if e >= 1}
    return (LaurentSeries._normalized(lo, s.truncation_order),
            LaurentSeries._normalized(hi, s.truncation_order))


def empirical_radius(s: LaurentSeries) -> float:
    """Root-test radius estimate for a power series, with a divergence
    discriminator: a persistent monotone rise of |a_n|^(1/n) across the
    stored tail (factorial-type growth) reports radius 0."""
    samples = sorted((e, abs(c) ** (1.0 / e)) for e, c in s.items()
                     if e >= 1 and abs(c) > 0)
    if not samples:
        return math.inf
    tail = [v for _, v in samples[-8:]]
    if (len(tail) >= 8 and all(a < b for a, b in zip(tail, tail[1:]))
            and tail[-1] > 1.2 * tail[0]):
        return 0.0
    peak = max(v for _, v in samples[-6:])
    return math.inf if peak == 0 else 1.0 / peak


def formal_borel(s: LaurentSeries, k: int) -> LaurentSeries:
    """Formal Borel transform of order k: a_l -> a_l / Gamma(1 + l/k)."""
    if k < 1:
        raise ValueError("Borel order must be a positive integer")
    if not s.is_zero and s.min_exponent < 0:
        raise SeriesError("formal Borel transform needs a power series (no poles)")
    data = {e: c / complex(_gamma(1.0 + e / k)) for e, c in s.items()}
    return LaurentSeries._normalized(data, s.truncation_order)


def q_borel(s: LaurentSeries, level: int, q: float) -> LaurentSeries:
    """q-Borel transform of order `level`: a_n -> a_n / Gamma_p(1 + n/level)."""
    if level < 1:
        raise ValueError("level must be a positive integer")
    if not s.is_zero and s.min_exponent < 0:
        raise SeriesError("q-Borel transform needs a power series (no poles)")
    p = 1.0 / float(q)
    data = {e: c / gamma_p(1.0 + e / level, p) for e, c in s.items()}
    return LaurentSeries._normalized(data, s.truncation_order)


def q_borel_deform_coeffs(s: LaurentSeries, level: int, q: float) -> LaurentSeries:
    """Coefficients of the level-`level` q-deformation of a positive part.

    The deformed coefficient family is fixed by requiring that its q-Borel
    transform of order `level` equals the classical Borel transform of the
    input: a_n -> a_n * Gamma_p(1 + n/level) / Gamma(1 + n/level), p = 1/q.
    """
    if level < 1:
        raise ValueError("level must be a positive integer")
    if not s.is_zero and s.min_exponent < 1:
        raise SeriesError("q-Borel deformation applies to the positive part only")
    p = 1.0 / float(q)
    data = {e: c * gamma_p(1.0 + e / level, p) / complex(_gamma(1.0 + e / level))
            for e, c in s.items()}
    return LaurentSeries._normalized(data, s.truncation_order)


# -- exact Laurent-polynomial rational functions ----------------------------


@dataclass(frozen=True)
class LaurentPolynomial:
    """Finite sum of c_e z^e, exact (no truncation)."""

    terms: Tuple[Tuple[int, complex], ...]

    @staticmethod
    def from_dict(data: Dict[int, complex]) -> "LaurentPolynomial":
        live = sorted((e, complex(c)) for e, c in data.items() if c != 0)
        return LaurentPolynomial(tuple(live))

    @staticmethod
    def constant(c: complex) -> "LaurentPolynomial":
        return LaurentPolynomial.from_dict({0: complex(c)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> float:
        return INFINITE_VALUATION if self.is_zero else float(self.terms[0][0])

    def leading(self) -> complex:
        return 0.0 if self.is_zero else self.terms[0][1]

    def add(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        data = dict(self.terms)
        for e, c in other.terms:
            data[e] = data.get(e, 0.0) + c
        return LaurentPolynomial.from_dict(data)

    def multiply(self, other: "LaurentPolynomial") -> "LaurentPolynomial":
        data: Dict[int, complex] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                data[e1 + e2] = data.get(e1 + e2, 0.0) + c1 * c2
        return LaurentPolynomial.from_dict(data)

    def scalar(self, factor: complex) -> "LaurentPolynomial":
        return LaurentPolynomial.from_dict({e: factor * c for e, c in self.terms})

    def evaluate(self, z: complex) -> complex:
        return sum(c * complex(z) ** e for e, c in self.terms)

    def to_series(self, truncation_order: int = DEFAULT_TRUNCATION) -> LaurentSeries:
        return LaurentSeries.from_terms(self.terms, truncation_order)

    def __repr__(self):
        if self.is_zero:
            return "LaurentPolynomial(0)"
        return "LaurentPolynomial(" + " + ".join(f"({c:.6g})z^{e}" for e, c in self.terms) + ")"


@dataclass(frozen=True)
class RationalLaurent:
    """Exact ratio of two Laurent polynomials (the eq-closed polar data)."""

    numerator: LaurentPolynomial
    denominator: LaurentPolynomial

    def __post_init__(self):
        if self.denominator.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")

    @staticmethod
    def constant(c: complex) -> "RationalLaurent":
        return RationalLaurent(LaurentPolynomial.constant(c), LaurentPolynomial.constant(1.0))

    @staticmethod
    def from_polynomial(poly: LaurentPolynomial) -> "RationalLaurent":
        return RationalLaurent(poly, LaurentPolynomial.constant(1.0))

    def multiply(self, other: "RationalLaurent") -> "RationalLaurent":
        return RationalLaurent(self.numerator.multiply(other.numerator),
                               self.denominator.multiply(other.denominator))

    def divide(self, other: "RationalLaurent") -> "RationalLaurent":
        if other.numerator.is_zero:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalLaurent(self.numerator.multiply(other.denominator),
                               self.denominator.multiply(other.numerator))

    def scalar(self, factor: complex) -> "RationalLaurent":
        return RationalLaurent(self.numerator.scalar(factor), self.denominator)

    def evaluate(self, z: complex) -> complex:
        den = self.denominator.evaluate(z)
        if den == 0:
            raise ZeroDivisionError(f"rational function pole at z={z}")
        return self.numerator.evaluate(z) / den

    def valuation(self) -> float:
        if self.numerator.is_zero:
            return INFINITE_VALUATION
        return self.numerator.valuation() - self.denominator.valuation()

    def leading(self) -> complex:
        if self.numerator.is_zero:
            return 0.0
        return self.numerator.leading() / self.denominator.leading()

    def limit_at_infinity(self) -> complex:
        """Value as |z| -> infinity (0 when the numerator degree is smaller)."""
        ndeg = max((e for e, _ in self.numerator.terms), default=None)
        ddeg = max(e for e, _ in self.denominator.terms)
        if ndeg is None:
            return 0.0
        if ndeg > ddeg:
            raise SeriesError("unbounded at infinity")
        if ndeg < ddeg:
            return 0.0
        return (dict(self.numerator.terms)[ndeg]) / (dict(self.denominator.terms)[ddeg])

    def to_series(self, truncation_order: int = DEFAULT_TRUNCATION) -> LaurentSeries:
        num = self.numerator.to_series(truncation_order + abs(self.denominator.terms[0][0]) + 4)
        den = self.denominator.to_series(truncation_order + abs(self.denominator.terms[0][0]) + 4)
        return num.multiply(den.invert()).truncate(truncation_order)

    def __repr__(self):
        return f"RationalLaurent({self.numerator!r} / {self.denominator!r})"

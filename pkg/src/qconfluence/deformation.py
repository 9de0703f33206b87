"""Build the q-dependent coefficient family of a factored differential
operator: q-Borel deformation of the positive parts, the top-down rational
recursion for the nonpositive parts, and their combination.

For each factor, 1+(q-1)f = (1+(q-1)f^{>0}) * (1+(q-1)f^{<=0}):

  * the nonpositive parts close over exact rational functions of 1/z;
    starting from 1+(q-1)f_m^{<=0} := 1+(q-1)\\tilde f_m^{<=0}, each step
    down divides by q*(1+(q-1)(\\tilde f_{j+1}^{<=0}-\\tilde f_j^{<=0}-1)),
  * the positive parts deform coefficientwise through the q-Borel weights
    Gamma_p(1+n/l)/Gamma(1+n/l); divergent components evaluate through the
    discrete q-Laplace of their continued Borel image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .domain import DomainError, LogPoint
from .operators import FactoredDifferentialOperator, QSystemCoefficient
from .quadrature import IntegrandFn, q_laplace_discrete
from .series import (LaurentPolynomial, LaurentSeries, RationalLaurent,
                     empirical_radius, q_borel_deform_coeffs, valuation)
from .summation import BorelImage


class DeformationError(ValueError):
    pass


@dataclass(frozen=True)
class PositiveLevel:
    """One summability level of a positive part: the deformed coefficient
    series, the level, and (for divergent components) the Borel image."""

    deformed: LaurentSeries          # q-deformed coefficients of this component
    level: int
    image: Optional[BorelImage]
    radius: float                    # empirical radius of the deformed series

    def evaluate_f(self, z: LogPoint, q: float, tol: float) -> complex:
        if self.image is None:
            if z.modulus >= 0.9 * self.radius:
                raise DomainError(
                    f"|z|={z.modulus:g} outside the empirical radius "
                    f"{self.radius:g} of a convergent positive component")
            return self.deformed.evaluate(z.to_complex())
        gfn = IntegrandFn(self.image.g, None, self.image.name)
        return q_laplace_discrete(gfn, z, self.level, q, tol=tol)


@dataclass(frozen=True)
class PositivePart:
    levels: Tuple[PositiveLevel, ...]
    q: float
    tol: float = 1e-12

    @property
    def is_zero(self) -> bool:
        return all(lv.deformed.is_zero and lv.image is None for lv in self.levels)

    def evaluate_f(self, z: LogPoint) -> complex:
        """f^{>0}(z, q)."""
        return sum((lv.evaluate_f(z, self.q, self.tol) for lv in self.levels), 0.0 + 0.0j)

    def evaluate_g(self, z: LogPoint) -> complex:
        """1 + (q-1) f^{>0}(z, q)."""
        return 1.0 + (self.q - 1.0) * self.evaluate_f(z)

    def f_series(self, order: int) -> LaurentSeries:
        total = LaurentSeries.zero(order)
        for lv in self.levels:
            total = total.add(lv.deformed.truncate(order))
        return total


def deform_positive(f_pos: LaurentSeries,
                    levels: Sequence[Tuple[LaurentSeries, int, Optional[BorelImage]]],
                    q: float, tol: float = 1e-12) -> PositivePart:
    """Deform a positive part given its declared level decomposition.

    `levels` lists (component series, level, Borel image or None); the
    components must add back to f_pos, and a divergent component without an
    image is an error (there is nothing to evaluate it with).
    """
    if not levels:
        levels = [(f_pos, 1, None)] if not f_pos.is_zero else []
    total = LaurentSeries.zero(f_pos.truncation_order)
    for comp, _, _ in levels:
        total = total.add(comp)
    if total.items() != f_pos.items():
        raise DeformationError("level components do not sum to the positive part")
    built: List[PositiveLevel] = []
    for comp, level, image in levels:
        if not comp.is_zero and valuation(comp) < 1:
            raise DeformationError("positive components must have valuation >= 1")
        if image is None and not comp.is_zero and empirical_radius(comp) < 1e-6:
            # the deformation itself regularizes factorial growth, but its
            # radius shrinks with q-1; a divergent classical component needs
            # the continued Borel image to be evaluable uniformly in q
            raise DeformationError(
                "divergent positive component needs a Borel image for evaluation")
        deformed = q_borel_deform_coeffs(comp, level, q)
        built.append(PositiveLevel(deformed, level, image, empirical_radius(deformed)))
    return PositivePart(tuple(built), q, tol)


def deform_nonpositive(op: FactoredDifferentialOperator, q: float) -> List[RationalLaurent]:
    """The rational family 1+(q-1)f_j^{<=0}, j = 1..m, solved top-down."""
    if op.order < 2:
        raise DeformationError("the deformation pipeline needs order >= 2")
    m = op.order
    parts = [LaurentPolynomial.from_dict(
        {e: c for e, c in op.coeffs[j].items() if e <= 0}) for j in range(m)]
    out: List[Optional[RationalLaurent]] = [None] * m
    top = LaurentPolynomial.constant(1.0).add(parts[m - 1].scalar(q - 1.0))
    out[m - 1] = RationalLaurent.from_polynomial(top)
    for j in range(m - 2, -1, -1):
        diff = parts[j + 1].add(parts[j].scalar(-1.0)).add(LaurentPolynomial.constant(-1.0))
        denom_poly = LaurentPolynomial.constant(1.0).add(diff.scalar(q - 1.0))
        const = 1.0 + (q - 1.0) * (op.constant_term(j + 1) - op.constant_term(j) - 1.0)
        if abs(const) < 1e-12:
            crit = op.constant_term(j + 1) - op.constant_term(j) - 1.0
            q_crit = 1.0 - 1.0 / crit if crit != 0 else float("nan")
            raise DeformationError(
                f"nonpositive recursion step {j + 1}: constant term vanishes at q={q:g} "
                f"(critical q = {q_crit:g})")
        out[j] = out[j + 1].divide(
            RationalLaurent.from_polynomial(denom_poly).scalar(q))
    return [r for r in out if r is not None]


@dataclass(frozen=True)
class QCoefficientFamily(QSystemCoefficient):
    """One diagonal coefficient g = 1+(q-1)f of the deformed q-system."""

    nonpos: RationalLaurent                  # 1 + (q-1) f^{<=0}, exact
    positive: Optional[PositivePart]         # None when f^{>0} = 0
    q: float
    label: str = ""

    def evaluate_g(self, z) -> complex:
        zp = z if isinstance(z, LogPoint) else LogPoint.from_complex(complex(z))
        g = self.nonpos.evaluate(zp.to_complex())
        if self.positive is not None:
            g *= self.positive.evaluate_g(zp)
        return g

    def evaluate_f(self, z) -> complex:
        return (self.evaluate_g(z) - 1.0) / (self.q - 1.0)

    def series(self, order: int) -> LaurentSeries:
        s = self.nonpos.to_series(order)
        if self.positive is not None:
            pos_g = LaurentSeries.one(order).add(
                self.positive.f_series(order).scalar(self.q - 1.0))
            s = s.multiply(pos_g).truncate(order)
        return s

    def boundary_constant(self) -> complex:
        """Value of 1+(q-1)f^{<=0} as |z| -> infinity (the elliptic weight)."""
        return self.nonpos.limit_at_infinity()


def combine(positive: Optional[PositivePart], nonpos: RationalLaurent,
            q: float, label: str = "") -> QCoefficientFamily:
    if positive is not None and positive.is_zero:
        positive = None
    return QCoefficientFamily(nonpos, positive, q, label)


def build_q_family(op: FactoredDifferentialOperator, q: float,
                   level_spec: Optional[Sequence[Sequence[Tuple[LaurentSeries, int, Optional[BorelImage]]]]] = None,
                   tol: float = 1e-12) -> List[QCoefficientFamily]:
    """The full deformation route: rational nonpositive parts plus deformed
    positive parts, one QCoefficientFamily per factor."""
    nonpos = deform_nonpositive(op, q)
    fams: List[QCoefficientFamily] = []
    for j in range(op.order):
        f_pos = op.positive_part(j)
        spec = None if level_spec is None else level_spec[j]
        if f_pos.is_zero and not spec:
            pos = None
        else:
            pos = deform_positive(f_pos, spec or [], q, tol)
        fams.append(combine(pos, nonpos[j], q, label=f"f{j + 1}"))
    return fams

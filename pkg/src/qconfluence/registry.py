"""Named built-in examples wired for the CLI and the acceptance suite.

"sec3-m2"   order-2 operator with coefficients (-1/z, 0); its closed
            rational q-family has e_q(1/z) as the first diagonal solution.
"sec43"     order-3 operator with coefficients (-2/z^2, -1/z, 0); the
            closed rational q-family has diagonal solutions
            e_{q^2}(1/z^2), e_q(1/z), 1.  Two coefficient routes exist:
            the closed "registry" family and the generic "eq17" recursion;
            they differ and both are carried.
"euler"     the factorially divergent series sum (-1)^n n! z^{n+1}, whose
            Borel transform continues to log(1+zeta); used by the
            summation and Laplace checks.

Experiment presets: each example ships a default grid.  For "sec43" the
preset grid named "published" reproduces the published sector
(arg in [0.55pi, 0.7pi]); the preset "valid" sits inside the sector where
the iterated integrals of both matrices actually converge
(arg in [-0.1pi, 0.1pi]); see the README for the discrepancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .deformation import QCoefficientFamily, build_q_family
from .domain import LogPoint
from .operators import FactoredDifferentialOperator
from .series import (LaurentPolynomial, LaurentSeries, RationalLaurent)
from .summation import BorelImage, get_borel_image


def make_grid(r_lo: float, r_hi: float, arg_lo: float, arg_hi: float,
              n_r: int, n_arg: int) -> List[LogPoint]:
    pts: List[LogPoint] = []
    for i in range(n_r):
        r = r_lo if n_r == 1 else r_lo + (r_hi - r_lo) * i / (n_r - 1)
        for k in range(n_arg):
            a = arg_lo if n_arg == 1 else arg_lo + (arg_hi - arg_lo) * k / (n_arg - 1)
            pts.append(LogPoint(r, a))
    return pts


def _rational_family_coeff(q: float, exponent: int, scale: Callable[[float], complex],
                           label: str) -> QCoefficientFamily:
    """g = 1 / (1 + scale(q) z^{-exponent}) as an exact rational family."""
    den = LaurentPolynomial.from_dict({0: 1.0, -exponent: scale(q)})
    rat = RationalLaurent(LaurentPolynomial.constant(1.0), den)
    return QCoefficientFamily(rat, None, q, label)


@dataclass
class ExampleSpec:
    name: str
    diff_op: Optional[FactoredDifferentialOperator]
    registry_family: Optional[Callable[[float], List[QCoefficientFamily]]]
    q_values: Tuple[float, ...]
    grids: Dict[str, List[LogPoint]] = field(default_factory=dict)
    default_grid: str = "valid"
    series: Optional[LaurentSeries] = None
    borel_image: Optional[BorelImage] = None

    def family(self, q: float, deformation: str = "registry") -> List[QCoefficientFamily]:
        if deformation == "registry":
            if self.registry_family is None:
                raise KeyError(f"example {self.name!r} has no registry family")
            return self.registry_family(q)
        if deformation == "eq17":
            if self.diff_op is None:
                raise KeyError(f"example {self.name!r} has no differential operator")
            return build_q_family(self.diff_op, q)
        raise KeyError(f"unknown deformation route {deformation!r}")


def _sec3_m2() -> ExampleSpec:
    op = FactoredDifferentialOperator((
        LaurentSeries.from_terms([(-1, -1.0)]),
        LaurentSeries.zero(),
    ))

    def fam(q: float) -> List[QCoefficientFamily]:
        return [
            _rational_family_coeff(q, 1, lambda qq: (qq - 1.0) / qq, "f1"),
            QCoefficientFamily(RationalLaurent.constant(1.0), None, q, "f2"),
        ]

    grids = {
        "valid": make_grid(0.15, 0.35, -0.1 * math.pi, 0.1 * math.pi, 3, 3),
        "wide": make_grid(0.7, 1.1, -0.1 * math.pi, 0.1 * math.pi, 3, 3),
    }
    return ExampleSpec("sec3-m2", op, fam, (1.2, 1.1, 1.05, 1.01), grids, "valid")


def _sec43() -> ExampleSpec:
    op = FactoredDifferentialOperator((
        LaurentSeries.from_terms([(-2, -2.0)]),
        LaurentSeries.from_terms([(-1, -1.0)]),
        LaurentSeries.zero(),
    ))

    def fam(q: float) -> List[QCoefficientFamily]:
        return [
            _rational_family_coeff(q, 2, lambda qq: (qq - 1.0) * (1.0 + qq) / qq ** 2, "f1"),
            _rational_family_coeff(q, 1, lambda qq: (qq - 1.0) / qq, "f2"),
            QCoefficientFamily(RationalLaurent.constant(1.0), None, q, "f3"),
        ]

    grids = {
        "published": make_grid(0.1, 0.3, 0.55 * math.pi, 0.7 * math.pi, 5, 5),
        "valid": make_grid(0.7, 1.1, -0.1 * math.pi, 0.1 * math.pi, 5, 5),
    }
    return ExampleSpec("sec43", op, fam, (1.2, 1.1, 1.05, 1.02, 1.01), grids, "valid")


def _euler() -> ExampleSpec:
    order = 24
    terms = []
    fact = 1.0
    for n in range(order - 1):
        terms.append((n + 1, (-1.0) ** n * fact))
        fact *= (n + 1)
    series = LaurentSeries.from_terms(terms, order)
    return ExampleSpec("euler", None, None, (1.1, 1.05, 1.01), {}, "valid",
                       series=series, borel_image=get_borel_image("log1p"))


_EXAMPLES: Dict[str, Callable[[], ExampleSpec]] = {
    "sec3-m2": _sec3_m2,
    "sec43": _sec43,
    "euler": _euler,
}


def example_names() -> List[str]:
    return sorted(_EXAMPLES)


def get_example(name: str) -> ExampleSpec:
    try:
        return _EXAMPLES[name]()
    except KeyError:
        raise KeyError(f"unknown example {name!r}; available: {example_names()}")

"""Points on the Riemann surface of the logarithm, sectors, and the q parameter.

A point of the surface is a pair (modulus, argument) with the argument a
plain real number: arguments differing by 2*pi are *different* points.
Keeping the pair explicit (instead of a bare complex number) makes sheet
errors impossible by construction; the collapse to a complex number is an
explicit, lossy operation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Evaluation requested outside a declared domain."""


@dataclass(frozen=True)
class LogPoint:
    """A point modulus * e^(i*argument) on the surface of the logarithm."""

    modulus: float
    argument: float

    def __post_init__(self):
        if not self.modulus > 0.0:
            raise ValueError(f"LogPoint modulus must be positive, got {self.modulus}")

    @staticmethod
    def from_complex(w: complex) -> "LogPoint":
        """Principal-sheet lift: argument taken in (-pi, pi]."""
        if w == 0:
            raise ValueError("0 is not on the surface of the logarithm")
        return LogPoint(abs(w), cmath.phase(w))

    @staticmethod
    def from_polar(modulus: float, argument: float) -> "LogPoint":
        return LogPoint(float(modulus), float(argument))

    def to_complex(self) -> complex:
        return self.modulus * cmath.exp(1j * self.argument)

    def log(self) -> complex:
        return math.log(self.modulus) + 1j * self.argument

    def scale(self, factor: float) -> "LogPoint":
        """Multiply the modulus by a positive real factor (argument kept)."""
        if factor <= 0.0:
            raise ValueError("scale factor must be positive")
        return LogPoint(self.modulus * factor, self.argument)

    def __repr__(self):
        return f"LogPoint({self.modulus!r}, {self.argument!r})"


def power(z: LogPoint, a: complex) -> complex:
    """z^a := exp(a log z) on the surface; sheet-sensitive by design."""
    return cmath.exp(complex(a) * z.log())


def ramify(c: float, z: LogPoint) -> LogPoint:
    """The map rho_c sending z to z^c, kept on the surface (real c != 0)."""
    c = float(c)
    if c == 0.0:
        raise ValueError("rho_0 is degenerate; ramification index must be nonzero")
    return LogPoint(z.modulus ** c, z.argument * c)


def dilate(z: LogPoint, k: int, q: "QParam | float") -> LogPoint:
    """q^k z for real q > 1: the modulus scales, the argument is untouched."""
    qv = q.q if isinstance(q, QParam) else float(q)
    return LogPoint(z.modulus * qv ** k, z.argument)


@dataclass(frozen=True)
class SectorDomain:
    """Open sector {arg in (d - eps, d + eps), 0 < |z| < radius} on the surface."""

    direction: float
    half_width: float
    radius: float = math.inf

    def __post_init__(self):
        if not self.half_width > 0.0:
            raise ValueError("sector half-width must be positive")
        if not self.radius > 0.0:
            raise ValueError("sector radius must be positive")

    def contains(self, z: LogPoint) -> bool:
        return (
            abs(z.argument - self.direction) < self.half_width
            and 0.0 < z.modulus < self.radius
        )

    def require(self, z: LogPoint) -> None:
        if not self.contains(z):
            raise DomainError(
                f"point (|z|={z.modulus:g}, arg={z.argument:g}) outside sector "
                f"(d={self.direction:g}, eps={self.half_width:g}, a={self.radius:g})"
            )


@dataclass(frozen=True)
class QParam:
    """A real dilation parameter q > 1; p = 1/q is always recomputed."""

    q: float

    def __post_init__(self):
        if isinstance(self.q, complex):
            raise ValueError("complex q rejected: the dilation parameter is real > 1")
        if not self.q > 1.0:
            raise ValueError(f"q must satisfy q > 1, got {self.q}")

    @property
    def p(self) -> float:
        return 1.0 / self.q

    def dilate(self, z: LogPoint, k: int = 1) -> LogPoint:
        return dilate(z, k, self.q)

    def __repr__(self):
        return f"QParam({self.q!r})"

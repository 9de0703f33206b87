"""Borel-Laplace summation in a direction, singular-direction bookkeeping,
and the constructive admissible-direction finder.

Directions are angles in radians; arcs live on the circle [0, 2*pi).  The
admissibility condition for a factored differential operator is, per
polar-leading coefficient: cos(arg(f_{j, mu_j}) + mu_j * theta) > 0 for
every j < m, an arc family of period 2*pi/|mu_j|.  Directions d in the
intersection make every diagonal solution of index j < m decay along the
ray toward 0, which is exactly where the iterated-integral construction
of the q-side converges uniformly in N.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .domain import DomainError, LogPoint, SectorDomain
from .operators import FactoredDifferentialOperator
from .quadrature import IntegrandFn, laplace
from .series import LaurentSeries, empirical_radius, leading, valuation

TWO_PI = 2.0 * math.pi


class SingularDirectionError(ValueError):
    pass


class SummationError(ValueError):
    pass


@dataclass(frozen=True)
class BorelImage:
    """Analytic continuation of a Borel transform along rays, with a growth
    certificate |g(zeta)| <= J exp(L |zeta|^level) and its declared singular
    directions (finite modulo 2*pi)."""

    name: str
    level: int
    g: Callable[[LogPoint], complex]
    growth: Tuple[float, float]               # (J, L)
    singular_directions: Tuple[float, ...] = ()

    def __call__(self, zeta: LogPoint) -> complex:
        return self.g(zeta)

    def growth_level1(self) -> Tuple[float, float]:
        """Constants for |g(zeta^{1/level})| <= J exp(L' |zeta|) in the
        ramified variable; L is unchanged because |zeta^{1/l}|^l = |zeta|."""
        return self.growth


def _image_zero() -> BorelImage:
    return BorelImage("zero", 1, lambda zeta: 0.0, (1.0, 1e-9), ())


def _image_log1p() -> BorelImage:
    def g(zeta: LogPoint) -> complex:
        return cmath.log(1.0 + zeta.to_complex())
    return BorelImage("log1p", 1, g, (8.0, 1e-6), (math.pi,))


def make_rational_image(name: str, numerator: Sequence[complex],
                        denominator: Sequence[complex], level: int = 1) -> BorelImage:
    """Rational continuation data; denominator roots declare the singular rays."""
    num = np.asarray(numerator, dtype=complex)
    den = np.asarray(denominator, dtype=complex)
    if not len(den) or not np.any(den != 0):
        raise ValueError("rational image needs a nonzero denominator")
    roots = np.roots(den[::-1]) if len(den) > 1 else np.array([])
    sing = tuple(sorted(float(cmath.phase(r)) % TWO_PI for r in roots if r != 0))

    def g(zeta: LogPoint) -> complex:
        w = zeta.to_complex()
        nv = complex(np.polyval(num[::-1], w))
        dv = complex(np.polyval(den[::-1], w))
        if dv == 0:
            raise ZeroDivisionError(f"rational image {name}: pole at zeta={w}")
        return nv / dv

    bound = float(np.sum(np.abs(num))) + 1.0
    return BorelImage(name, level, g, (bound, 1e-6), sing)


BOREL_IMAGES: Dict[str, Callable[[], BorelImage]] = {
    "zero": _image_zero,
    "log1p": _image_log1p,
}


def get_borel_image(name: str) -> BorelImage:
    try:
        return BOREL_IMAGES[name]()
    except KeyError:
        raise KeyError(f"unknown Borel image {name!r}; built-ins: {sorted(BOREL_IMAGES)}")


# ---------------------------------------------------------------------------
# summation
# ---------------------------------------------------------------------------


def sum_in_direction(f_pos: LaurentSeries, decomposition: Sequence[BorelImage],
                     d: float, direction_tolerance: float = 1e-9,
                     quad_tol: float = 1e-11) -> IntegrandFn:
    """Borel-Laplace sum of a positive part in direction d.

    Convergent series (positive radius detected by coefficient ratios, and
    no declared decomposition) are evaluated directly; otherwise every
    level contributes a Laplace transform of its continued Borel image.
    """
    singular = sorted({s % TWO_PI for img in decomposition for s in img.singular_directions})
    for s in singular:
        dist = abs((d - s + math.pi) % TWO_PI - math.pi)
        if dist < direction_tolerance:
            raise SingularDirectionError(
                f"direction d={d:g} hits the singular direction {s:g}")

    if not decomposition:
        radius = empirical_radius(f_pos)
        if not radius > 0.0 or (radius < 1e-6 and not f_pos.is_zero):
            raise SummationError(
                "divergent positive part without a Borel image decomposition")
        safe = 0.9 * radius if math.isfinite(radius) else math.inf

        def direct(t: LogPoint) -> complex:
            if t.modulus >= safe:
                raise DomainError(
                    f"|z|={t.modulus:g} outside the empirical radius {safe:g} "
                    f"of the convergent positive part")
            return f_pos.evaluate(t.to_complex())

        return IntegrandFn(direct, None, "series-sum")

    max_level = max(img.level for img in decomposition)
    sector = SectorDomain(d, math.pi / (2.0 * max_level), math.inf)

    def summed(t: LogPoint) -> complex:
        total = 0.0 + 0.0j
        for img in decomposition:
            gfn = IntegrandFn(img.g, None, img.name)
            total += laplace(gfn, t, img.level, d, tol=quad_tol,
                             growth=img.growth_level1())
        return total

    return IntegrandFn(summed, sector, f"borel-sum@{d:g}")


# ---------------------------------------------------------------------------
# admissible directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleSector:
    direction: float
    half_width: float
    intervals: Tuple[Tuple[float, float], ...]
    per_factor_arcs: Tuple[Tuple[Tuple[float, float], ...], ...]

    def as_sector(self, radius: float = math.inf) -> SectorDomain:
        return SectorDomain(self.direction, self.half_width, radius)


def cosine_arcs(phi: float, mu: int) -> List[Tuple[float, float]]:
    """Open arcs {theta in [0, 2pi): cos(phi + mu*theta) > 0} for mu < 0."""
    if mu >= 0:
        raise ValueError("arc condition needs a negative exponent mu")
    length = math.pi / abs(mu)
    arcs = []
    # cos(x) > 0 on (2k*pi - pi/2, 2k*pi + pi/2); invert x = phi + mu*theta
    for k in range(-2 * abs(mu) - 2, 2 * abs(mu) + 3):
        x_lo = 2.0 * k * math.pi - math.pi / 2.0
        x_hi = 2.0 * k * math.pi + math.pi / 2.0
        t1 = (x_lo - phi) / mu
        t2 = (x_hi - phi) / mu
        lo, hi = min(t1, t2), max(t1, t2)
        arcs.append((lo, hi))
    clipped: List[Tuple[float, float]] = []
    for lo, hi in arcs:
        shift = math.floor(lo / TWO_PI) * TWO_PI
        lo -= shift
        hi -= shift
        if hi <= TWO_PI:
            if hi > lo:
                clipped.append((lo, hi))
        else:
            clipped.append((lo, TWO_PI))
            clipped.append((0.0, hi - TWO_PI))
    merged = sorted(set((round(a, 15), round(b, 15)) for a, b in clipped if b - a > 1e-14))
    out: List[Tuple[float, float]] = []
    for a, b in merged:
        if out and a <= out[-1][1] + 1e-14:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _membership(theta: float, arcs: Sequence[Tuple[float, float]]) -> bool:
    return any(a < theta < b for a, b in arcs)


def intersect_arc_families(families: Sequence[Sequence[Tuple[float, float]]]
                           ) -> List[Tuple[float, float]]:
    """Sorted-endpoint sweep: elementary intervals whose midpoints lie in
    every family."""
    points = {0.0, TWO_PI}
    for fam in families:
        for a, b in fam:
            points.add(a % TWO_PI)
            points.add(b if b <= TWO_PI else b % TWO_PI)
    grid = sorted(points)
    kept: List[Tuple[float, float]] = []
    for lo, hi in zip(grid, grid[1:]):
        if hi - lo < 1e-14:
            continue
        mid = 0.5 * (lo + hi)
        if all(_membership(mid, fam) for fam in families):
            if kept and abs(kept[-1][1] - lo) < 1e-13:
                kept[-1] = (kept[-1][0], hi)
            else:
                kept.append((lo, hi))
    # wrap-around merge at 0 / 2pi
    if len(kept) >= 2 and kept[0][0] < 1e-13 and abs(kept[-1][1] - TWO_PI) < 1e-13:
        first = kept.pop(0)
        kept[-1] = (kept[-1][0], TWO_PI + first[1])
    return kept


def admissible_direction(op: FactoredDifferentialOperator,
                         singular: Sequence[float] = ()) -> AdmissibleSector:
    """Arc intersection over j < m, minus singular directions; returns the
    midpoint of a largest surviving interval with a quarter-length margin.

    Ties break deterministically toward the smallest midpoint >= 0.  An
    empty intersection is reported as an error rather than assumed away.
    """
    m = op.order
    if m < 2:
        raise SummationError("direction finding needs at least two factors")
    families: List[List[Tuple[float, float]]] = []
    for j in range(m - 1):
        s = op.coeffs[j]
        mu = valuation(s)
        if not mu < 0:
            raise SummationError(
                f"factor {j + 1} has no pole part (v={mu:g}); no arc condition")
        phi = cmath.phase(leading(s))
        families.append(cosine_arcs(phi, int(mu)))
    kept = intersect_arc_families(families)

    sing_points = sorted({s % TWO_PI for s in singular})
    if sing_points:
        punctured: List[Tuple[float, float]] = []
        for a, b in kept:
            cuts = [a] + [s for s in sing_points if a < s < b] + [b]
            for lo, hi in zip(cuts, cuts[1:]):
                if hi - lo > 1e-12:
                    punctured.append((lo, hi))
        kept = punctured

    if not kept:
        raise SummationError("no admissible direction: the arc intersection is empty")

    best_len = max(b - a for a, b in kept)
    candidates = [0.5 * (a + b) % TWO_PI for a, b in kept if abs((b - a) - best_len) < 1e-13]
    d = min(c for c in candidates)
    eps = best_len / 4.0
    for s in sing_points:
        dist = abs((d - s + math.pi) % TWO_PI - math.pi)
        eps = min(eps, dist)
    return AdmissibleSector(d, eps, tuple(kept), tuple(tuple(f) for f in families))

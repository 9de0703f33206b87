"""Factored differential / q-difference operators, companion systems, the
non-resonance test, and the formal diagonalizing gauge.

Conventions fixed here (they are load-bearing):
  * the input list [f_1, ..., f_m] is the companion-diagonal order and the
    solution-diagonal order;
  * differential coefficients have strictly increasing valuations (the
    zero series counts as +inf and may only appear last);
  * the q-side puts no ordering constraint on the valuations of
    g_j = 1 + (q-1) f_j; the gauge recursion below handles either order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .series import (INFINITE_VALUATION, LaurentSeries, SeriesError, leading,
                     split_parts, valuation)


class OperatorError(ValueError):
    pass


class ResonanceError(ArithmeticError):
    """A resonant divisor was hit while solving the gauge recursion."""


@dataclass(frozen=True)
class FactoredDifferentialOperator:
    """The ordered coefficient list of (delta - f_m) ... (delta - f_1)."""

    coeffs: Tuple[LaurentSeries, ...]

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise OperatorError("need at least one factor")
        vals = [valuation(c) for c in self.coeffs]
        for j in range(len(vals) - 1):
            if not vals[j] < vals[j + 1]:
                raise OperatorError(
                    f"coefficient valuations must increase strictly; "
                    f"v(f_{j + 1})={vals[j]:g} !< v(f_{j + 2})={vals[j + 1]:g}")
        if len(vals) >= 2 and not vals[-2] < 0:
            raise OperatorError("the next-to-last coefficient must have negative valuation")

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def valuations(self) -> List[float]:
        return [valuation(c) for c in self.coeffs]

    def polar_terms(self, j: int) -> List[Tuple[int, complex]]:
        """(exponent, coefficient) pairs with exponent < 0 of f_{j+1}."""
        return [(e, c) for e, c in self.coeffs[j].items() if e < 0]

    def constant_term(self, j: int) -> complex:
        return self.coeffs[j].coefficient(0)

    def positive_part(self, j: int) -> LaurentSeries:
        return split_parts(self.coeffs[j])[1]

    def nonpositive_part(self, j: int) -> LaurentSeries:
        return split_parts(self.coeffs[j])[0]


class QSystemCoefficient:
    """Interface for one diagonal entry g = 1 + (q-1) f of a q-companion.

    Concrete families (rational registry entries, the deformation output)
    provide: a truncated series, evaluation at LogPoint, and the leading
    data (v0, t0).
    """

    def series(self, order: int) -> LaurentSeries:  # pragma: no cover - interface
        raise NotImplementedError

    def evaluate_g(self, z) -> complex:  # pragma: no cover - interface
        raise NotImplementedError

    def leading_data(self) -> Tuple[int, complex]:
        s = self.series(8)
        v = valuation(s)
        if v == INFINITE_VALUATION:
            raise OperatorError("q-coefficient 1+(q-1)f is identically zero")
        return int(v), leading(s)


@dataclass(frozen=True)
class SeriesQCoefficient(QSystemCoefficient):
    """A q-coefficient backed directly by a Laurent series (tests, synthetic)."""

    data: LaurentSeries

    def series(self, order: int) -> LaurentSeries:
        if order > self.data.truncation_order:
            raise SeriesError("requested order beyond stored truncation")
        return self.data.truncate(order)

    def evaluate_g(self, z) -> complex:
        zc = z.to_complex() if hasattr(z, "to_complex") else complex(z)
        return self.data.evaluate(zc)


@dataclass(frozen=True)
class FactoredQOperator:
    """(delta_q - f_m) ... (delta_q - f_1) via its diagonal entries g_j."""

    coeffs: Tuple[QSystemCoefficient, ...]
    q: float
    q_validity: Tuple[float, float] = (1.0, 1.5)

    def __post_init__(self):
        if not self.q > 1.0:
            raise OperatorError("q must be > 1")
        if not (self.q_validity[0] < self.q <= self.q_validity[1]):
            raise OperatorError(
                f"q={self.q:g} outside declared validity {self.q_validity}")

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def leading_data(self) -> List[Tuple[int, complex]]:
        return [c.leading_data() for c in self.coeffs]

    def slopes(self) -> List[int]:
        """Newton-polygon data: the list -v0(g_j) (multiplicities implicit)."""
        return [-v for v, _ in self.leading_data()]


@dataclass(frozen=True)
class CompanionMatrix:
    """Upper-bidiagonal companion: diagonal coefficients, constant superdiagonal."""

    size: int
    flavor: str                     # "differential" | "q-difference"
    diagonal: Tuple[object, ...]    # series (differential) or QSystemCoefficient
    superdiagonal: complex

    def entry_structure(self, j: int, k: int) -> str:
        if j == k:
            return "diagonal"
        if k == j + 1:
            return "superdiagonal"
        return "zero"

    def evaluate(self, j: int, k: int, z) -> complex:
        if j == k:
            d = self.diagonal[j]
            if isinstance(d, LaurentSeries):
                zc = z.to_complex() if hasattr(z, "to_complex") else complex(z)
                return d.evaluate(zc)
            return d.evaluate_g(z)
        if k == j + 1:
            return self.superdiagonal
        return 0.0


def build_companion(op) -> CompanionMatrix:
    """Companion matrix of a factored operator (either flavor)."""
    if isinstance(op, FactoredDifferentialOperator):
        return CompanionMatrix(op.order, "differential", tuple(op.coeffs), 1.0)
    if isinstance(op, FactoredQOperator):
        return CompanionMatrix(op.order, "q-difference", tuple(op.coeffs), op.q - 1.0)
    raise TypeError(f"not a factored operator: {type(op)!r}")


# ---------------------------------------------------------------------------
# non-resonance
# ---------------------------------------------------------------------------


@dataclass
class NonresonanceReport:
    passed: bool
    vacuous: bool
    failures: List[Tuple[int, int, int, complex]] = field(default_factory=list)

    def __bool__(self):
        return self.passed


def check_nonresonance(op: FactoredQOperator, tol: float = 1e-9) -> NonresonanceReport:
    """Equal valuations force t0 ratios off the discrete group q^Z.

    Passes vacuously when all valuations are distinct.  A failure records
    the pair (j, k) (1-based) and the integer witness n with ratio = q^n.
    """
    data = op.leading_data()
    q = op.q
    failures: List[Tuple[int, int, int, complex]] = []
    vacuous = True
    for j in range(len(data)):
        for k in range(j + 1, len(data)):
            vj, tj = data[j]
            vk, tk = data[k]
            if vj != vk:
                continue
            vacuous = False
            ratio = tj / tk
            if abs(ratio.imag) > tol * abs(ratio):
                continue
            r = ratio.real
            if r <= 0:
                continue
            n_est = math.log(r) / math.log(q)
            n = round(n_est)
            if abs(n_est - n) < tol:
                failures.append((j + 1, k + 1, n, ratio))
    return NonresonanceReport(not failures, vacuous, failures)


# ---------------------------------------------------------------------------
# formal gauge (diagonalization over formal Laurent series)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormalGauge:
    """Upper-triangular G with unit-constant-term diagonal: C = G[D]_sigma_q."""

    size: int
    q: float
    order: int
    entries: Dict[Tuple[int, int], LaurentSeries]
    diagonal_data: Tuple[Tuple[int, complex], ...]    # (v_j, t_j) per row

    def entry(self, j: int, k: int) -> LaurentSeries:
        """0-based indices; zero series below the diagonal."""
        if j > k:
            return LaurentSeries.zero(self.order)
        return self.entries[(j, k)]

    def predicted_valuation(self, j: int, k: int) -> int:
        """Valuation of entry (j,k): w_{k,k}=0 and w_{j,k} = w_{j+1,k} - min(v_j, v_k).

        This reproduces -sum_{l=j}^{k-1} v_l when the valuations are
        nondecreasing and stays correct when they decrease.
        """
        w = 0
        vk = self.diagonal_data[k][0]
        for i in range(k - 1, j - 1, -1):
            w -= min(self.diagonal_data[i][0], vk)
        return w


def _series_coeff_window(s: LaurentSeries, lo: int, hi: int) -> Dict[int, complex]:
    return {e: s.coefficient(e) for e in range(lo, min(hi, s.truncation_order))
            if s.coefficient(e) != 0}


def formal_gauge(op: FactoredQOperator, order: int = 24) -> FormalGauge:
    """Solve C = G[D]_sigma_q column by column, right to left.

    Diagonal entries solve z^{v_j} t_j sigma_q g = (1+(q-1)f_j) g with unit
    constant term; above the diagonal each entry solves
        z^{v_k} t_k sigma_q g_{j,k} = g_j g_{j,k} + (q-1) g_{j+1,k},
    coefficient by coefficient, ascending from the predicted valuation.  A
    vanishing divisor is resonance and is reported, never masked.
    """
    rep = check_nonresonance(op)
    if not rep.passed:
        j, k, n, ratio = rep.failures[0]
        raise ResonanceError(
            f"non-resonance fails for pair ({j},{k}): t0 ratio {ratio:g} = q^{n}")
    m = op.order
    q = op.q
    data = op.leading_data()
    vmax_shift = sum(abs(v) for v, _ in data) + m + 2
    work = order + vmax_shift
    gseries = [c.series(work) for c in op.coeffs]

    entries: Dict[Tuple[int, int], LaurentSeries] = {}

    # diagonal: hat g_{j,j} in C[[z]] with constant term 1
    for j in range(m):
        vj, tj = data[j]
        norm = gseries[j].scalar(1.0 / tj)
        h = {e - vj: c for e, c in norm.items() if e != vj}
        a = [0.0 + 0.0j] * work
        a[0] = 1.0
        for n in range(1, work):
            acc = 0.0 + 0.0j
            for i, hc in h.items():
                if 1 <= i <= n:
                    acc += hc * a[n - i]
            a[n] = acc / (q ** n - 1.0)
        entries[(j, j)] = LaurentSeries.from_terms(
            [(i, a[i]) for i in range(work)], work).truncate(order)

    gauge_stub = FormalGauge(m, q, order, {}, tuple(data))

    # columns k, rows j = k-1 .. 0
    full: Dict[Tuple[int, int], LaurentSeries] = dict(entries)
    for k in range(m):
        vk, tk = data[k]
        for j in range(k - 1, -1, -1):
            vj, tj = data[j]
            vmin = min(vj, vk)
            source = full[(j + 1, k)].scalar(q - 1.0)
            w_pred = gauge_stub.predicted_valuation(j, k)
            if int(valuation(source)) != w_pred + vmin:
                raise OperatorError(
                    f"gauge entry ({j + 1},{k + 1}): predicted valuation {w_pred} "
                    f"inconsistent with source valuation {valuation(source):g}")
            u_hi = min(source.truncation_order - vmin,
                       gseries[j].truncation_order + w_pred - vj)
            gj_terms = dict(gseries[j].items())
            y: Dict[int, complex] = {}
            for u in range(w_pred, u_hi):
                n = u + vmin
                s_n = source.coefficient(n) if n < source.truncation_order else 0.0
                sigma_term = 0.0 + 0.0j
                if vk > vmin:
                    idx = n - vk
                    if idx in y:
                        sigma_term = tk * (q ** idx) * y[idx]
                prod_term = 0.0 + 0.0j
                for i, gc in gj_terms.items():
                    if i == vj and vj == vmin:
                        continue
                    idx = n - i
                    if idx in y:
                        prod_term += gc * y[idx]
                # equation at exponent n: t_k q^{n-v_k} y_{n-v_k} = (g_j y)_n + s_n
                if vj == vk:
                    divisor = tk * (q ** u) - tj
                    if abs(divisor) < 1e-12 * (abs(tk * q ** u) + abs(tj)):
                        raise ResonanceError(
                            f"resonant divisor at entry ({j + 1},{k + 1}), exponent {u}: "
                            f"t_k q^{u} - t_j = {divisor:g}")
                    y[u] = (s_n + prod_term - sigma_term) / divisor
                elif vj < vk:
                    y[u] = (sigma_term - prod_term - s_n) / tj
                else:
                    y[u] = (s_n + prod_term) / (tk * (q ** u))
            if y.get(w_pred, 0.0) == 0.0:
                raise OperatorError(
                    f"gauge entry ({j + 1},{k + 1}): predicted valuation {w_pred} "
                    f"not attained (vanishing leading coefficient)")
            full[(j, k)] = LaurentSeries.from_terms(list(y.items()), u_hi)

    trimmed = {key: s.truncate(order) for key, s in full.items()}
    return FormalGauge(m, q, order, trimmed, tuple(data))


def gauge_residual(gauge: FormalGauge, op: FactoredQOperator,
                   order: Optional[int] = None) -> float:
    """Largest coefficient of sigma_q(G) D - C G through `order`, scale-relative.

    Built from raw series operations (scale_argument / multiply / subtract),
    so it exercises the defining identity independently of the recursion
    that produced the gauge.
    """
    m = gauge.size
    q = gauge.q
    order = gauge.order if order is None else min(order, gauge.order)
    gs = [c.series(gauge.order) for c in op.coeffs]
    worst = 0.0
    for j in range(m):
        for k in range(j, m):
            vk, tk = gauge.diagonal_data[k]
            left = gauge.entry(j, k).scale_argument(q).scalar(tk)
            left = left.multiply(LaurentSeries.from_terms([(vk, 1.0)], left.truncation_order + abs(vk) + 1))
            right = gs[j].multiply(gauge.entry(j, k))
            if j + 1 <= k:
                right = right.add(gauge.entry(j + 1, k).scalar(q - 1.0))
            diff = left.subtract(right)
            scale = max([abs(c) for _, c in left.items()] + [1.0])
            for e, c in diff.items():
                if e < order and abs(c) / scale > worst:
                    worst = abs(c) / scale
    return worst

"""Fundamental solutions on both sides of the confluence and the error
metric between them.

q side: diagonal entries are the convergent products

    u_j = w_j * Lambda_{q,a_j} * prod_l e_{q^{|l|}}( f_{j,l} z^l / l )
              * prod_{nu<=-1} (1 + (q-1) f_j^{>0}(q^nu z))

with a_j the |z|->infinity constant of 1+(q-1)f_j^{<=0} and w_j the unique
correction in C{1/z} with w(inf)=1.  All factor logs satisfy one-step
recurrences along the q-spiral (sigma_q Theta = z Theta and the
q-exponential functional equation), so a whole spiral of diagonal values
costs O(depth).  Off-diagonal entries come from suffix sums of the
variation-of-constants recursion; they satisfy the companion system
exactly by construction, which the residual checks re-verify numerically.

Differential side: closed polar factors times the exponential of a ray
integral of the summed positive part; off-diagonal entries are nested ray
integrals computed on a shared geometric grid per ray.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain import LogPoint, power
from .operators import (FactoredDifferentialOperator, FactoredQOperator,
                        formal_gauge)
from .qfunctions import EvaluationOverflow, ThetaEvaluator, qexp_entire_log
from .quadrature import (IntegrandFn, QuadratureError, laplace,
                         laplace_log_primitive)
from .series import leading, valuation


class SolutionError(ArithmeticError):
    pass


class ConfluenceAbort(RuntimeError):
    """An evaluator failed inside the confluence sweep; carries location."""


# ---------------------------------------------------------------------------
# q-side diagonal family
# ---------------------------------------------------------------------------


@dataclass
class DiagonalSolutionFamily:
    """Diagonal solutions u_{j,j}(z, q) of the deformed companion system."""

    diff_op: FactoredDifferentialOperator
    qcoeffs: Sequence  # QCoefficientFamily-like (evaluate_g, boundary_constant, nonpos, positive)
    q: float
    theta_tolerance: float = 1e-14
    w_tolerance: float = 2e-15
    pos_tolerance: float = 1e-14

    def __post_init__(self):
        if len(self.qcoeffs) != self.diff_op.order:
            raise SolutionError("coefficient family size does not match the operator")
        self._theta = ThetaEvaluator(self.q, self.theta_tolerance)
        self._polar = [self.diff_op.polar_terms(j) for j in range(self.diff_op.order)]
        self._abar = [complex(c.boundary_constant()) for c in self.qcoeffs]
        for j, a in enumerate(self._abar):
            if a == 0:
                raise SolutionError(f"factor {j + 1}: boundary constant vanishes")

    @property
    def order(self) -> int:
        return self.diff_op.order

    # -- low-level spiral machinery ----------------------------------------

    def _polar_logs(self, j: int, z: LogPoint, idx: np.ndarray) -> np.ndarray:
        """sum_l log e_{q^{|l|}}( (f_{j,l}/l) (q^i z)^l ) over spiral indices i.

        Uses the functional equation e_Q(Q w) = (1+(Q-1)w) e_Q(w) to walk
        the spiral from a single anchored evaluation at i = 0.
        """
        q = self.q
        out = np.zeros(len(idx), dtype=complex)
        for ell, coeff in self._polar[j]:
            Q = q ** abs(ell)
            w0 = (coeff / ell) * power(z, ell)
            args = w0 * np.exp(idx * ell * math.log(q))  # (q^i z)^l scaling
            anchor = qexp_entire_log(w0, Q)
            logs = np.empty(len(idx), dtype=complex)
            i0 = int(np.searchsorted(idx, 0))
            logs[i0] = anchor
            # descending: log e(Q*w) = log(1+(Q-1)w) + log e(w)
            for t in range(i0 - 1, -1, -1):
                logs[t] = logs[t + 1] + np.log(1.0 + (Q - 1.0) * args[t + 1])
            # ascending: log e(w/Q) = log e(w) - log(1+(Q-1)w/Q)
            for t in range(i0 + 1, len(idx)):
                logs[t] = logs[t - 1] - np.log(1.0 + (Q - 1.0) * args[t])
            out += logs
        return out

    def _lambda_logs(self, j: int, z: LogPoint, idx: np.ndarray) -> np.ndarray:
        abar = self._abar[j]
        if abar == 1.0:
            return np.zeros(len(idx), dtype=complex)
        base = self._theta.lambda_qa_log(z.to_complex(), abar)
        return base + idx * cmath.log(abar)

    def _nonpos_logs(self, j: int, z: LogPoint, idx: np.ndarray) -> np.ndarray:
        rat = self.qcoeffs[j].nonpos
        zc = z.to_complex()
        pts = zc * np.exp(idx * math.log(self.q))
        num = np.asarray([rat.numerator.evaluate(p) for p in pts])
        den = np.asarray([rat.denominator.evaluate(p) for p in pts])
        if np.any(den == 0) or np.any(num == 0):
            raise SolutionError(f"factor {j + 1}: coefficient pole/zero on the spiral of {zc}")
        return np.log(num) - np.log(den)

    def _positive_logs(self, j: int, z: LogPoint, idx: np.ndarray) -> np.ndarray:
        pos = getattr(self.qcoeffs[j], "positive", None)
        if pos is None:
            return np.zeros(len(idx), dtype=complex)
        logq = math.log(self.q)
        vals = np.empty(len(idx), dtype=complex)
        for t, i in enumerate(idx):
            pt = LogPoint(z.modulus * math.exp(i * logq), z.argument)
            vals[t] = pos.evaluate_g(pt)
        return np.log(vals)

    def spiral_logs(self, z: LogPoint, depth: int) -> np.ndarray:
        """log u_{j,j}(q^{-n} z) for j = 0..m-1, n = 0..depth-1."""
        m = self.order
        down_asc = np.arange(-depth + 1, 1)      # ascending: -(depth-1) .. 0
        out = np.empty((m, depth), dtype=complex)
        for j in range(m):
            # ascending correction w_j: walk h_j upward until it flattens
            # (or stagnates at the roundoff floor of the log cancellations)
            up_block = 256
            up_idx = np.arange(-depth + 1, up_block + 1)
            H = self._h_logs(j, z, up_idx)
            prev_tail = math.inf
            for _ in range(64):
                tail = float(np.max(np.abs(H[-8:])))
                if tail < self.w_tolerance:
                    break
                if tail < 1e-12 and tail > 0.25 * prev_tail:
                    break
                prev_tail = tail
                ext = np.arange(up_idx[-1] + 1, up_idx[-1] + 1 + up_block)
                H = np.concatenate([H, self._h_logs(j, z, ext)])
                up_idx = np.concatenate([up_idx, ext])
                up_block = min(2 * up_block, 8192)
            else:
                raise SolutionError(
                    f"w correction for factor {j + 1} did not flatten along the spiral")
            # log w at spiral index i = -n equals -sum_{i' >= i} H[i']
            suffix = np.cumsum(H[::-1])[::-1]
            w_logs = -suffix[:depth][::-1]        # reorder to n = 0 .. depth-1

            lam = self._lambda_logs(j, z, down_asc)[::-1]
            pol = self._polar_logs(j, z, down_asc)[::-1]
            pos = self._pos_cumulative(j, z, depth)
            out[j] = w_logs + lam + pol + pos
        return out

    def _h_logs(self, j: int, z: LogPoint, idx: np.ndarray) -> np.ndarray:
        """log h_j(q^i z) with h_j = (1+(q-1)f^{<=0}) * A_j / sigma_q A_j."""
        ext = np.append(idx, idx[-1] + 1)
        a_logs = self._lambda_logs(j, z, ext) + self._polar_logs(j, z, ext)
        g_logs = self._nonpos_logs(j, z, idx)
        return g_logs + a_logs[:-1] - a_logs[1:]

    def _pos_cumulative(self, j: int, z: LogPoint, depth: int) -> np.ndarray:
        """log prod_{nu<=-1} g^{>0}(q^{nu-n} z) for n = 0..depth-1."""
        pos = getattr(self.qcoeffs[j], "positive", None)
        if pos is None:
            return np.zeros(depth, dtype=complex)
        block = depth + 64
        idx = np.arange(-1, -block - 1, -1)
        P = self._positive_logs(j, z, idx)
        for _ in range(32):
            if np.all(np.abs(P[-8:]) < self.pos_tolerance):
                break
            ext = np.arange(idx[-1] - 1, idx[-1] - 1 - block, -1)
            P = np.concatenate([P, self._positive_logs(j, z, ext)])
            idx = np.concatenate([idx, ext])
        else:
            raise SolutionError(f"positive product for factor {j + 1} did not converge")
        # Pi(n) = sum of P at indices <= -n-1; P is ordered -1, -2, ...
        csum = np.cumsum(P[::-1])[::-1]
        return np.array([csum[n] for n in range(depth)])

    def log_u(self, j: int, z: LogPoint) -> complex:
        return complex(self.spiral_logs(z, 1)[j, 0])

    def u(self, j: int, z: LogPoint) -> complex:
        return cmath.exp(self.log_u(j, z))


# ---------------------------------------------------------------------------
# q-side fundamental matrix
# ---------------------------------------------------------------------------


@dataclass
class ConnectionConstant:
    estimate: complex
    N_used: int
    converged: bool
    peak_abs: float


class QFundamentalMatrix:
    """Upper-triangular solution matrix of sigma_q Y = C Y via iterated
    Jackson integrals (mode "pure": all connection constants zero; mode
    "with-constants": adds the measured spiral-limit constants)."""

    def __init__(self, family: DiagonalSolutionFamily, mode: str = "pure",
                 tol: float = 1e-12, base_depth: Optional[int] = None,
                 max_depth: int = 250000):
        if mode not in ("pure", "with-constants"):
            raise ValueError("mode must be 'pure' or 'with-constants'")
        self.family = family
        self.mode = mode
        self.tol = tol
        self.q = family.q
        q = family.q
        self.base_depth = base_depth or (96 + int(math.ceil(14.0 / (q - 1.0))))
        self.max_depth = max_depth
        self._cache: Dict[Tuple[float, float], np.ndarray] = {}
        self._gauge = None

    @property
    def order(self) -> int:
        return self.family.order

    def _connection_matrix(self, z: LogPoint) -> np.ndarray:
        m = self.order
        c = np.zeros((m, m), dtype=complex)
        if self.mode == "with-constants":
            for j in range(m):
                for k in range(j + 1, m):
                    c[j, k] = self.connection(j, k, z).estimate
        return c

    def matrix(self, z: LogPoint) -> np.ndarray:
        key = (round(z.modulus, 15), round(z.argument, 15))
        if key in self._cache:
            return self._cache[key]
        m = self.order
        q = self.q
        depth = self.base_depth
        cmat = self._connection_matrix(z)
        while True:
            logs = self.family.spiral_logs(z, depth)
            if not np.all(np.isfinite(logs.real)):
                raise EvaluationOverflow(
                    f"diagonal solution overflow/underflow on the spiral of |z|={z.modulus:g}, "
                    f"arg={z.argument:g}")
            U = np.zeros((m, m), dtype=complex)
            for j in range(m):
                U[j, j] = cmath.exp(logs[j, 0])
            ok = True
            X: Dict[int, np.ndarray] = {}
            for k in range(m):
                X[k] = np.ones(depth, dtype=complex)
                for j in range(k - 1, -1, -1):
                    T = np.exp(logs[j + 1, 1:] - logs[j, :-1]) * X[j + 1][1:]
                    if not np.all(np.isfinite(T)):
                        raise EvaluationOverflow(
                            f"off-diagonal term overflow at entry ({j + 1},{k + 1}), "
                            f"|z|={z.modulus:g}, arg={z.argument:g}")
                    suffix = np.concatenate([np.cumsum(T[::-1])[::-1], [0.0]])
                    F = (q - 1.0) * suffix
                    tail = (q - 1.0) * float(np.sum(np.abs(T[-8:])))
                    scale = max(abs(F[0]), 1e-300)
                    if tail > self.tol * scale:
                        ok = False
                        break
                    X[j] = cmat[j, k] + F
                    U[j, k] = cmath.exp(logs[j, 0]) * X[j][0]
                if not ok:
                    break
            if ok:
                self._cache[key] = U
                return U
            if depth >= self.max_depth:
                raise QuadratureError(
                    f"iterated Jackson integrals did not converge at depth {depth} "
                    f"(|z|={z.modulus:g}, arg={z.argument:g}): boundedness hypothesis "
                    f"violated on this ray?")
            depth = min(2 * depth, self.max_depth)

    def entry(self, j: int, k: int, z: LogPoint) -> complex:
        if j > k:
            return 0.0
        return self.matrix(z)[j, k]

    # -- checks -------------------------------------------------------------

    def residual(self, z: LogPoint) -> float:
        """|sigma_q U - C U| / scale, from two independent matrix evaluations."""
        q = self.q
        U = self.matrix(z)
        Uq = self.matrix(LogPoint(z.modulus * q, z.argument))
        m = self.order
        g = np.array([self.family.qcoeffs[j].evaluate_g(z) for j in range(m)])
        C = np.zeros((m, m), dtype=complex)
        for j in range(m):
            C[j, j] = g[j]
            if j + 1 < m:
                C[j, j + 1] = q - 1.0
        R = Uq - C @ U
        scale = max(float(np.max(np.abs(Uq))), 1e-300)
        return float(np.max(np.abs(R))) / scale

    def finite_N_identity_error(self, j: int, k: int, z: LogPoint, N: int) -> float:
        """Error in the finite-N variation-of-constants representation."""
        q = self.q
        left = self.entry(j, k, z)
        zN = LogPoint(z.modulus * q ** (-N), z.argument)
        UN = self.matrix(zN)
        ujj_z = self.entry(j, j, z)
        bridge = UN[j, k] * ujj_z / UN[j, j]
        part = 0.0 + 0.0j
        for l in range(-1, -N - 1, -1):
            t = LogPoint(z.modulus * q ** l, z.argument)
            tq = LogPoint(z.modulus * q ** (l + 1), z.argument)
            part += self.matrix(t)[j + 1, k] / self.matrix(tq)[j, j]
        right = bridge + ujj_z * (q - 1.0) * part
        scale = max(abs(left), abs(right), 1e-300)
        return abs(left - right) / scale

    def connection(self, j: int, k: int, z: LogPoint, N_max: int = 400,
                   tol: float = 1e-10, window: int = 5) -> ConnectionConstant:
        """Spiral-limit estimate of the connection constant c_{j,k}(z, q).

        Reports the Cauchy-stopped limit estimate together with the peak
        magnitude of the scanned sequence (the transient that the
        confluence limit sends to zero as q -> 1).
        """
        if not j < k:
            raise ValueError("connection constants exist above the diagonal only")
        if self._gauge is None:
            op = FactoredQOperator(tuple(self.family.qcoeffs), self.q,
                                   (1.0, max(1.5, self.q)))
            order = 6 + sum(abs(v) for v, _ in op.leading_data())
            self._gauge = formal_gauge(op, order=order)
        entry = self._gauge.entry(j, k)
        v0 = int(valuation(entry))
        t0 = leading(entry)
        logs = self.family.spiral_logs(z, N_max)
        n = np.arange(N_max)
        logz = z.log()
        log_c = (cmath.log(t0) + v0 * (logz - n * math.log(self.q))
                 + logs[k] - logs[j])
        with np.errstate(over="ignore"):
            cs = np.exp(log_c)
        peak = float(np.max(np.abs(cs)))
        run = 0
        for i in range(1, N_max):
            if abs(cs[i] - cs[i - 1]) <= tol * (1.0 + abs(cs[i])):
                run += 1
                if run >= window:
                    return ConnectionConstant(complex(cs[i]), i, True, peak)
            else:
                run = 0
        return ConnectionConstant(complex(cs[-1]), N_max - 1, False, peak)


# ---------------------------------------------------------------------------
# differential-side fundamental matrix
# ---------------------------------------------------------------------------


_GL32 = np.polynomial.legendre.leggauss(32)


class _CumulativeRay:
    """Cumulative integral int_0^r f(t) dt/t along a fixed ray, on a shared
    geometric grid anchored at `anchor`; values at arbitrary radii combine a
    cached tail with one partial Gauss-Legendre panel."""

    def __init__(self, fn: Callable[[LogPoint], complex], theta: float,
                 anchor: float, ratio: float = 0.75, tol: float = 1e-12,
                 max_segments: int = 2000):
        self.fn = fn
        self.theta = theta
        self.anchor = anchor
        self.ratio = ratio
        self.tol = tol
        self.max_segments = max_segments
        self._segs: List[complex] = []
        self._tails: Dict[int, complex] = {}

    def _boundary(self, k: int) -> float:
        return self.anchor * self.ratio ** k

    def _integrand(self, x: float) -> complex:
        return self.fn(LogPoint(x, self.theta)) / x

    def _panel(self, lo: float, hi: float) -> complex:
        mid = 0.5 * (hi + lo)
        rad = 0.5 * (hi - lo)
        xs, ws = _GL32
        acc = 0.0 + 0.0j
        try:
            for xk, wk in zip(xs, ws):
                acc += wk * self._integrand(mid + rad * xk)
        except OverflowError as exc:
            raise QuadratureError(
                f"ray integrand overflow near |t|={mid:g} along arg={self.theta:g}: "
                f"not integrable from 0 on this ray") from exc
        return acc * rad

    def _segment(self, k: int) -> complex:
        while len(self._segs) <= k:
            i = len(self._segs)
            self._segs.append(self._panel(self._boundary(i + 1), self._boundary(i)))
        return self._segs[k]

    def tail_from(self, k: int) -> complex:
        """sum of segments k, k+1, ... (the integral over (0, boundary(k)])."""
        if k in self._tails:
            return self._tails[k]
        acc = 0.0 + 0.0j
        small = 0
        peak = 0.0
        i = k
        while i < k + self.max_segments:
            seg = self._segment(i)
            acc += seg
            mag = abs(seg)
            peak = max(peak, mag)
            if mag < self.tol * max(abs(acc), 1e-300):
                small += 1
                if small >= 4:
                    break
            else:
                small = 0
            if i > k + 40 and mag > 1e8 * max(abs(acc), 1.0):
                raise QuadratureError(
                    f"ray integral divergent toward 0 along arg={self.theta:g} "
                    f"(growing contribution {mag:g} at segment {i})")
            i += 1
        else:
            raise QuadratureError(
                f"cumulative ray integral along arg={self.theta:g}: contributions "
                f"not decaying after {self.max_segments} segments")
        self._tails[k] = acc
        return acc

    def value(self, r: float) -> complex:
        if r > self.anchor:
            raise ValueError("radius beyond the grid anchor")
        k = int(math.ceil(math.log(r / self.anchor) / math.log(self.ratio) - 1e-12))
        k = max(k, 0)
        b = self._boundary(k)
        partial = self._panel(b, r) if r > b * (1.0 + 1e-15) else 0.0
        return self.tail_from(k) + partial

    def __call__(self, t: LogPoint) -> complex:
        return self.value(t.modulus)


class DifferentialFundamentalMatrix:
    """Upper-triangular fundamental solution of delta Y = S(C) Y built from
    polar closed forms and nested ray integrals along rays in the sector."""

    def __init__(self, diff_op: FactoredDifferentialOperator, direction: float,
                 positive_sums: Optional[Sequence[object]] = None,
                 tol: float = 1e-12, anchor: float = 4.0, ratio: float = 0.75):
        """`positive_sums` gives one positive-part description per factor:
        None (no positive part), a sequence of BorelImage (divergent route:
        values by Laplace, primitives by the collapsed Borel-plane integral),
        or an IntegrandFn (generic summed evaluator; primitives fall back to
        cumulative ray quadrature, fine for convergent series)."""
        self.op = diff_op
        self.direction = direction
        self.tol = tol
        self.anchor = anchor
        self.ratio = ratio
        m = diff_op.order
        self.positive_sums = list(positive_sums) if positive_sums is not None else [None] * m
        if len(self.positive_sums) != m:
            raise SolutionError("need one positive-part entry (or None) per factor")
        self._pos_cums: Dict[Tuple[int, float], _CumulativeRay] = {}
        self._off_cums: Dict[Tuple[int, int, float], _CumulativeRay] = {}
        self._prim_cache: Dict[Tuple[int, float, float], complex] = {}

    @property
    def order(self) -> int:
        return self.op.order

    @staticmethod
    def _is_image_list(entry) -> bool:
        return isinstance(entry, (list, tuple))

    def _pos_cum(self, j: int, theta: float) -> _CumulativeRay:
        key = (j, round(theta, 14))
        if key not in self._pos_cums:
            self._pos_cums[key] = _CumulativeRay(
                self.positive_sums[j], theta, self.anchor, self.ratio, self.tol)
        return self._pos_cums[key]

    def _pos_primitive(self, j: int, t: LogPoint) -> complex:
        """int_0^t S(f_j^{>0})(u) du/u along the ray of t."""
        entry = self.positive_sums[j]
        if entry is None:
            return 0.0
        key = (j, round(t.argument, 14), round(t.modulus, 14))
        cached = self._prim_cache.get(key)
        if cached is not None:
            return cached
        if self._is_image_list(entry):
            total = 0.0 + 0.0j
            for img in entry:
                gfn = IntegrandFn(img.g, None, img.name)
                total += laplace_log_primitive(gfn, t, img.level, self.direction,
                                               tol=self.tol, growth=img.growth_level1())
        else:
            total = self._pos_cum(j, t.argument).value(t.modulus)
        self._prim_cache[key] = total
        return total

    def log_diag(self, j: int, t: LogPoint) -> complex:
        total = self.op.constant_term(j) * t.log()
        tc = t.to_complex()
        for ell, coeff in self.op.polar_terms(j):
            total += (coeff / ell) * tc ** ell
        return total + self._pos_primitive(j, t)

    def diagonal(self, j: int, z: LogPoint) -> complex:
        return cmath.exp(self.log_diag(j, z))

    def positive_value(self, j: int, z: LogPoint) -> complex:
        """The summed positive part S(f_j^{>0})(z)."""
        entry = self.positive_sums[j]
        if entry is None:
            return 0.0
        if self._is_image_list(entry):
            total = 0.0 + 0.0j
            for img in entry:
                gfn = IntegrandFn(img.g, None, img.name)
                total += laplace(gfn, z, img.level, self.direction,
                                 tol=self.tol, growth=img.growth_level1())
            return total
        return entry(z)

    def coefficient_value(self, j: int, z: LogPoint) -> complex:
        """S(f_j)(z): exact nonpositive part plus the summed positive part."""
        zc = z.to_complex()
        val = self.op.constant_term(j)
        for ell, coeff in self.op.polar_terms(j):
            val += coeff * zc ** ell
        return val + self.positive_value(j, z)

    def _off_cum(self, j: int, k: int, theta: float) -> _CumulativeRay:
        key = (j, k, round(theta, 14))
        if key in self._off_cums:
            return self._off_cums[key]
        if k == j + 1:
            def integrand(t: LogPoint, _j=j, _k=k) -> complex:
                return cmath.exp(self.log_diag(_k, t) - self.log_diag(_j, t))
        else:
            inner = self._off_cum(j + 1, k, theta)

            def integrand(t: LogPoint, _j=j, _k=k, _inner=inner) -> complex:
                return cmath.exp(self.log_diag(_j + 1, t) - self.log_diag(_j, t)) * _inner.value(t.modulus)
        cum = _CumulativeRay(integrand, theta, self.anchor, self.ratio, self.tol)
        self._off_cums[key] = cum
        return cum

    def entry(self, j: int, k: int, z: LogPoint) -> complex:
        if j > k:
            return 0.0
        if j == k:
            return self.diagonal(j, z)
        cum = self._off_cum(j, k, z.argument)
        return self.diagonal(j, z) * cum.value(z.modulus)

    def matrix(self, z: LogPoint) -> np.ndarray:
        m = self.order
        U = np.zeros((m, m), dtype=complex)
        for j in range(m):
            for k in range(j, m):
                U[j, k] = self.entry(j, k, z)
        return U

    def residual(self, z: LogPoint, step: float = 1e-5) -> float:
        """|delta U - S(C) U| / scale with Richardson-extrapolated central
        differences in log z (delta = z d/dz = d/ds along z e^s)."""
        def at(s: float) -> np.ndarray:
            return self.matrix(LogPoint(z.modulus * math.exp(s), z.argument))

        d1 = (at(step) - at(-step)) / (2.0 * step)
        d2 = (at(step / 2.0) - at(-step / 2.0)) / step
        dU = (4.0 * d2 - d1) / 3.0
        m = self.order
        C = np.zeros((m, m), dtype=complex)
        for j in range(m):
            C[j, j] = self.coefficient_value(j, z)
            if j + 1 < m:
                C[j, j + 1] = 1.0
        U = self.matrix(z)
        R = dU - C @ U
        scale = max(float(np.max(np.abs(dU))), float(np.max(np.abs(C @ U))), 1e-300)
        return float(np.max(np.abs(R))) / scale


# ---------------------------------------------------------------------------
# confluence metric
# ---------------------------------------------------------------------------


@dataclass
class ConfluenceReport:
    q_values: List[float]
    errors: Dict[float, float]                       # E(q)
    per_entry: Dict[float, np.ndarray]               # entrywise max over the grid
    grid: List[LogPoint]

    def is_strictly_decreasing(self) -> bool:
        qs = sorted(self.q_values, reverse=True)
        vals = [self.errors[q] for q in qs]
        return all(a > b for a, b in zip(vals, vals[1:]))


def confluence_error(diff_matrix: DifferentialFundamentalMatrix,
                     q_matrix_factory: Callable[[float], QFundamentalMatrix],
                     grid: Sequence[LogPoint],
                     q_values: Sequence[float]) -> ConfluenceReport:
    """E(q) = max over the grid, entrywise, of |U_q - U_diff|.

    Any evaluator failure aborts with its location; there is no silent
    truncation of a non-convergent entry.
    """
    m = diff_matrix.order
    targets: List[np.ndarray] = []
    for z in grid:
        try:
            targets.append(diff_matrix.matrix(z))
        except (QuadratureError, ArithmeticError) as exc:
            raise ConfluenceAbort(
                f"differential matrix failed at |z|={z.modulus:g}, arg={z.argument:g}: {exc}"
            ) from exc
    errors: Dict[float, float] = {}
    per_entry: Dict[float, np.ndarray] = {}
    for q in q_values:
        qmat = q_matrix_factory(q)
        worst = np.zeros((m, m))
        for z, tgt in zip(grid, targets):
            try:
                U = qmat.matrix(z)
            except (QuadratureError, ArithmeticError) as exc:
                raise ConfluenceAbort(
                    f"q-side matrix failed at q={q:g}, |z|={z.modulus:g}, "
                    f"arg={z.argument:g}: {exc}") from exc
            worst = np.maximum(worst, np.abs(U - tgt))
        errors[q] = float(np.max(worst))
        per_entry[q] = worst
    return ConfluenceReport(list(q_values), errors, per_entry, list(grid))

"""Jackson q-integrals, ray integrals through essential-singularity decay
zones, the continuous Laplace transform, and the discrete q-Laplace.

The discrete q-Laplace implemented here is the exact inverse of the
coefficientwise q-Borel deformation: with p = 1/q and zeta_k =
p^k z^l/(1-p),

    f(z) = (1-p) z^{-l} * sum_{k>=0} zeta_k g(zeta_k^{1/l}) e_q(-p zeta_k / z^l),

where g is the level-l q-Borel transform of f.  The kernel is the entire
q-exponential at negative real arguments (equivalently 1/e_p at arguments
inside the convergence disk), and the identity reduces to the classical
Laplace integral as q -> 1.  It reproduces polynomials to machine
precision, which pins the normalization (see the monomial identity
L[zeta^x](z) = Gamma_p(1+x) z^x, a Jackson-integral representation of the
q-Gamma function).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domain import DomainError, LogPoint, QParam, SectorDomain, power
from .qfunctions import qexp_entire_log

_GL_NODES = 16


class QuadratureError(ArithmeticError):
    """Non-convergent or ill-posed numerical integral."""


@dataclass(frozen=True)
class IntegrandFn:
    """An evaluable map LogPoint -> complex with an optional declared domain.

    Evaluation outside the declared domain raises DomainError rather than
    extrapolating silently.
    """

    fn: Callable[[LogPoint], complex]
    domain: Optional[SectorDomain] = None
    label: str = "integrand"

    def __call__(self, t: LogPoint) -> complex:
        if self.domain is not None:
            self.domain.require(t)
        return self.fn(t)

    @staticmethod
    def from_complex_fn(fn: Callable[[complex], complex],
                        domain: Optional[SectorDomain] = None,
                        label: str = "integrand") -> "IntegrandFn":
        return IntegrandFn(lambda t: fn(t.to_complex()), domain, label)


@dataclass
class QuadratureReport:
    """`tail_estimate` is relative to the accumulated value, so that
    converged reports always satisfy tail_estimate < the requested
    tolerance."""

    value: complex
    terms_used: int
    tail_estimate: float
    converged: bool


def _as_q(q) -> float:
    return q.q if isinstance(q, QParam) else float(q)


# ---------------------------------------------------------------------------
# Jackson integrals
# ---------------------------------------------------------------------------


def jackson_partial(f: IntegrandFn, z: LogPoint, N: int, q) -> complex:
    """Finite Jackson integral (q-1) sum_{l=-N}^{-1} f(q^l z) q^l z; exact."""
    qv = _as_q(q)
    zc = z.to_complex()
    total = 0.0 + 0.0j
    for l in range(-1, -N - 1, -1):
        t = LogPoint(z.modulus * qv ** l, z.argument)
        try:
            val = f(t)
        except DomainError as exc:
            raise DomainError(f"Jackson node l={l}: {exc}") from exc
        total += val * (qv ** l) * zc
    return (qv - 1.0) * total


def jackson_improper(f: IntegrandFn, z: LogPoint, q, tol: float = 1e-12,
                     max_terms: int = 10 ** 6,
                     consecutive: int = 8) -> QuadratureReport:
    """Improper Jackson integral int_0^z f(t) d_q t, summing down the spiral.

    Stops after `consecutive` successive terms below tol relative to the
    accumulated value (a single small term is not evidence of convergence
    for q-periodic integrands).
    """
    qv = _as_q(q)
    zc = z.to_complex()
    total = 0.0 + 0.0j
    small_run = 0
    tail = 0.0
    scale_floor = 0.0
    for n, l in enumerate(range(-1, -max_terms - 1, -1)):
        t = LogPoint(z.modulus * qv ** l, z.argument)
        try:
            val = f(t)
        except DomainError as exc:
            raise DomainError(f"Jackson node l={l}: {exc}") from exc
        term = val * (qv ** l) * zc
        total += term
        scale_floor = max(scale_floor, abs(term))
        if abs(term) < (tol / consecutive) * max(abs(total), 1e-300):
            small_run += 1
            tail += abs(term)
            if small_run >= consecutive:
                rel_tail = tail / max(abs(total), 1e-300)
                return QuadratureReport((qv - 1.0) * total, n + 1, rel_tail, True)
        else:
            small_run = 0
            tail = 0.0
    raise QuadratureError(
        f"Jackson sum did not converge after {max_terms} terms "
        f"(running scale {scale_floor:g})")


# ---------------------------------------------------------------------------
# Ray integral toward 0
# ---------------------------------------------------------------------------


_gl_x, _gl_w = np.polynomial.legendre.leggauss(_GL_NODES)


def _gl_segment(fn: Callable[[float], complex], lo: float, hi: float) -> complex:
    mid = 0.5 * (hi + lo)
    rad = 0.5 * (hi - lo)
    total = 0.0 + 0.0j
    for xk, wk in zip(_gl_x, _gl_w):
        total += wk * fn(mid + rad * xk)
    return rad * total


def ray_integral(f: IntegrandFn, z: LogPoint, tol: float = 1e-10,
                 ratio: float = 0.5, max_segments: int = 200,
                 consecutive: int = 4) -> QuadratureReport:
    """int_0^z f(t) dt/t along the ray arg t = arg z.

    Geometric subdivision z*ratio^k with fixed-order Gauss-Legendre per
    segment; integrands decaying super-polynomially toward 0 converge in a
    few dozen segments.  Non-decaying contributions are reported as errors
    rather than truncated.
    """
    theta = z.argument

    # with t = x e^{i theta}, dt/t = dx/x: the phase drops out
    def integrand(x: float) -> complex:
        return f(LogPoint(x, theta)) / x

    total = 0.0 + 0.0j
    hi = z.modulus
    small_run = 0
    tail = 0.0
    peak = 0.0
    contribs = []
    for k in range(max_segments):
        lo = hi * ratio
        seg = _gl_segment(integrand, lo, hi)
        total += seg
        mag = abs(seg)
        contribs.append(mag)
        peak = max(peak, mag)
        if mag < (tol / consecutive) * max(abs(total), 1e-300):
            small_run += 1
            tail += mag
            if small_run >= consecutive:
                return QuadratureReport(total, k + 1, tail / max(abs(total), 1e-300), True)
        else:
            small_run = 0
            tail = 0.0
        # an integrand blowing up toward 0 shows sustained growth
        if (k >= 12 and contribs[-1] > 2.0 * contribs[-9]
                and contribs[-1] > 1e6 * max(abs(total), 1.0)):
            raise QuadratureError(
                f"ray integral: segment contributions growing toward 0 along arg={theta:g} "
                f"(segment {k}, contribution {mag:g})")
        hi = lo
        if hi < 1e-280:
            break
    raise QuadratureError(
        f"ray integral: contributions not decaying after {len(contribs)} segments "
        f"along arg={theta:g} (last {contribs[-1]:g})")


# ---------------------------------------------------------------------------
# Laplace transform of order k in direction d
# ---------------------------------------------------------------------------


def laplace(f: IntegrandFn, z: LogPoint, k: int, d: float, tol: float = 1e-10,
            growth: Optional[tuple[float, float]] = None,
            max_doublings: int = 60) -> complex:
    """Laplace transform of order k in direction d, evaluated at z.

    Computes int_0^{inf e^{ikd}} z^{-k} f(zeta^{1/k}) e^{-zeta/z^k} dzeta with
    the ray taken at angle k*d in the Borel plane; for k = 1 this is the
    usual z^{-1} int f(zeta) e^{-zeta/z} dzeta.  Requires arg z within
    pi/(2k) of d.  `growth` gives declared constants (J, L) with
    |f(zeta^{1/k})| <= J exp(L |zeta|); when present the truncation radius
    is solved from them, otherwise it is doubled adaptively.
    """
    if k < 1:
        raise ValueError("Laplace order must be a positive integer")
    qk = float(k)
    if abs(z.argument - d) >= math.pi / (2.0 * qk):
        raise DomainError(
            f"Laplace: arg z = {z.argument:g} outside (d - pi/2k, d + pi/2k), d={d:g}, k={k}")
    wk = power(z, -qk)                       # z^{-k}
    zk_log = qk * z.log()                    # log z^k
    decay = math.cos(qk * d - qk * z.argument) / math.exp(qk * math.log(z.modulus))
    ray_phase = cmath.exp(1j * qk * d)

    def integrand(s: float) -> complex:
        zeta = LogPoint(s, qk * d)
        root = LogPoint(s ** (1.0 / qk), d)
        val = f(root)
        kern = cmath.exp(-(s * ray_phase) * cmath.exp(-zk_log))
        return val * kern

    if growth is not None:
        J, L = growth
        if decay <= L:
            raise QuadratureError(
                f"Laplace divergent: kernel decay {decay:g} does not dominate growth L={L:g} "
                f"at |z|={z.modulus:g}")
        R = max((math.log(max(J, 1.0)) - math.log(tol)) / (decay - L), 4.0 / decay)
        return _laplace_on_radius(integrand, R, decay, tol) * wk * ray_phase

    R = 8.0 / decay
    prev = None
    for _ in range(max_doublings):
        cur = _laplace_on_radius(integrand, R, decay, tol)
        if prev is not None and abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur * wk * ray_phase
        prev = cur
        R *= 2.0
    raise QuadratureError("Laplace: truncation radius did not stabilize (growth too strong?)")


def _laplace_on_radius(integrand: Callable[[float], complex], R: float,
                       decay: float, tol: float) -> complex:
    """Composite geometric Gauss-Legendre on (0, R], fine near the kernel bulk."""
    total = 0.0 + 0.0j
    hi = R
    small_run = 0
    bulk = 4.0 / decay
    for _ in range(240):
        lo = hi * 0.5
        seg = _gl_segment(integrand, lo, hi)
        total += seg
        if hi < bulk and abs(seg) < tol * max(abs(total), 1e-300):
            small_run += 1
            if small_run >= 4:
                break
        else:
            small_run = 0
        hi = lo
        if hi < 1e-250:
            break
    return total


def laplace_log_primitive(f: IntegrandFn, z: LogPoint, k: int, d: float,
                          tol: float = 1e-10,
                          growth: Optional[tuple[float, float]] = None,
                          max_doublings: int = 60) -> complex:
    """int_0^z (L_k f)(t) dt/t collapsed to a single Borel-plane integral.

    Integrating the Laplace kernel first gives
        int_0^z t^{-k-1} e^{-zeta/t^k} k dt = e^{-zeta/z^k} / zeta,
    so the logarithmic primitive of a level-k sum is
        int_0^{inf e^{ikd}} f(zeta^{1/k}) e^{-zeta/z^k} dzeta / (k zeta),
    well defined whenever f vanishes at 0 (positive parts do)."""
    if k < 1:
        raise ValueError("Laplace order must be a positive integer")
    qk = float(k)
    if abs(z.argument - d) >= math.pi / (2.0 * qk):
        raise DomainError(
            f"Laplace primitive: arg z = {z.argument:g} outside (d - pi/2k, d + pi/2k)")
    zk_log = qk * z.log()
    decay = math.cos(qk * d - qk * z.argument) / math.exp(qk * math.log(z.modulus))
    ray_phase = cmath.exp(1j * qk * d)

    def integrand(s: float) -> complex:
        root = LogPoint(s ** (1.0 / qk), d)
        val = f(root)
        kern = cmath.exp(-(s * ray_phase) * cmath.exp(-zk_log))
        return val * kern / (qk * s)

    if growth is not None:
        J, L = growth
        if decay <= L:
            raise QuadratureError(
                f"Laplace primitive divergent: decay {decay:g} vs growth L={L:g}")
        R = max((math.log(max(J, 1.0)) - math.log(tol)) / (decay - L), 4.0 / decay)
        return _laplace_on_radius(integrand, R, decay, tol)

    R = 8.0 / decay
    prev = None
    for _ in range(max_doublings):
        cur = _laplace_on_radius(integrand, R, decay, tol)
        if prev is not None and abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
        R *= 2.0
    raise QuadratureError("Laplace primitive: truncation radius did not stabilize")


# ---------------------------------------------------------------------------
# discrete q-Laplace
# ---------------------------------------------------------------------------


_qlap_kernels: dict = {}


def _qlap_kernel(q: float, count: int) -> np.ndarray:
    """Kernel weights e_q(-p^{k+1}/(1-p)), k = 0..count-1; z-independent,
    cached per q and grown on demand."""
    vals = _qlap_kernels.get(q)
    if vals is None or len(vals) < count:
        p = 1.0 / q
        k = np.arange(max(count, 256), dtype=float)
        args = -(p ** (k + 1.0)) / (1.0 - p)
        vals = np.exp(qexp_entire_log(args, q))
        _qlap_kernels[q] = vals
    return vals[:count]


def q_laplace_discrete(g: IntegrandFn, z: LogPoint, level: int, q,
                       tol: float = 1e-14, max_terms: int = 10 ** 5,
                       consecutive: int = 8) -> complex:
    """Discrete q-Laplace of level `level` along the spiral through z (see
    the module docstring for the exact normalization).  Inverts the
    coefficientwise q-Borel deformation exactly on polynomials and
    degenerates to `laplace` as q -> 1."""
    if level < 1:
        raise ValueError("level must be a positive integer")
    qv = _as_q(q)
    p = 1.0 / qv
    one_minus_p = 1.0 - p
    lv = float(level)
    zl_mod = z.modulus ** lv
    zl_arg = z.argument * lv
    zl = cmath.exp(complex(math.log(zl_mod), zl_arg))

    total = 0.0 + 0.0j
    small_run = 0
    block = 256
    kern = _qlap_kernel(qv, block)
    for kidx in range(max_terms):
        if kidx >= block:
            block *= 2
            kern = _qlap_kernel(qv, block)
        zeta_mod = (p ** kidx) * zl_mod / one_minus_p
        zeta = cmath.exp(complex(math.log(zeta_mod), zl_arg))
        root = LogPoint(zeta_mod ** (1.0 / lv), z.argument)
        try:
            gval = g(root)
        except DomainError as exc:
            raise DomainError(f"q-Laplace node k={kidx}: {exc}") from exc
        term = zeta * gval * complex(kern[kidx])
        total += term
        if abs(term) < tol * max(abs(total), 1e-300):
            small_run += 1
            if small_run >= consecutive:
                break
        else:
            small_run = 0
    else:
        raise QuadratureError(f"q-Laplace sum did not converge in {max_terms} terms")
    return one_minus_p * total / zl

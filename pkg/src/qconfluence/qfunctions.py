"""q-special functions: theta, the elliptic ratio Lambda_{q,a}, l_q,
q-exponentials in both regimes, and the q-Gamma function.

All of these blow up double-exponentially somewhere, so the workhorse
representations are logarithmic: `theta_log` and `qexp_entire_log` return
log values directly and the plain evaluators exponentiate at the end
(raising OverflowError instead of silently saturating).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as classical_gamma  # noqa: F401  (re-exported)

from .domain import LogPoint, QParam


class PoleProximityError(ArithmeticError):
    """Evaluation too close to a pole spiral; carries the offending point."""


class EvaluationOverflow(OverflowError):
    pass


_LOG_HUGE = 700.0  # log of the largest double we let through


def _as_q(q) -> float:
    qv = q.q if isinstance(q, QParam) else float(q)
    if not qv > 1.0:
        raise ValueError("theta/Lambda/l_q need real q > 1")
    return qv


# ---------------------------------------------------------------------------
# theta
# ---------------------------------------------------------------------------


def theta_log(z: complex, q, tail_tolerance: float = 1e-14) -> tuple[complex, float]:
    """Scaled bilateral sum Theta_q(z) = sum_l q^{-l(l+1)/2} z^l.

    Returns (mantissa, log_scale) with Theta = mantissa * exp(log_scale).
    The window is centred on the dominant index l* = log_q|z| - 1/2 and
    extended until the boundary terms fall below tail_tolerance relative
    to the running total.
    """
    qv = _as_q(q)
    zc = complex(z)
    if zc == 0:
        raise ValueError("Theta_q has an essential singularity at 0")
    lnq = math.log(qv)
    ln_z = cmath.log(zc)
    l_star = ln_z.real / lnq - 0.5
    half = int(math.ceil(math.sqrt(2.0 * max(-math.log(tail_tolerance), 1.0) / lnq))) + 4
    lo = int(math.floor(l_star)) - half
    hi = int(math.ceil(l_star)) + half
    for _ in range(64):
        ls = np.arange(lo, hi + 1, dtype=float)
        log_terms = -ls * (ls + 1.0) / 2.0 * lnq + ls * ln_z
        peak = float(np.max(log_terms.real))
        mantissa = complex(np.sum(np.exp(log_terms - peak)))
        scale = abs(mantissa)
        edge = max(math.exp(log_terms[0].real - peak), math.exp(log_terms[-1].real - peak))
        if edge < tail_tolerance * max(scale, tail_tolerance):
            return mantissa, peak
        lo -= half
        hi += half
    raise ArithmeticError("theta window failed to converge")


def theta_argument_bound(q, relative_noise: float = 1e-12) -> float:
    """Largest |arg z| at which the bilateral sum keeps `relative_noise`
    accuracy in doubles.

    Away from the positive reals the sum cancels down to about
    exp(-arg^2 / (2 log q)) of its largest term, so roundoff grows by the
    reciprocal factor; for q near 1 this confines double-precision
    evaluation to a shrinking angular band (exact-arithmetic users are
    unaffected, and the band always covers the working sectors used by the
    confluence experiments at q >= 1.01).
    """
    qv = _as_q(q)
    room = math.log(relative_noise) - math.log(2.3e-16)
    if room <= 0:
        return 0.0
    return min(math.pi, math.sqrt(2.0 * math.log(qv) * room))


def theta(z: LogPoint | complex, q, tail_tolerance: float = 1e-14) -> complex:
    """Theta_q(z); raises EvaluationOverflow when the value exceeds doubles."""
    zc = z.to_complex() if isinstance(z, LogPoint) else complex(z)
    mant, scale = theta_log(zc, q, tail_tolerance)
    if scale + math.log(max(abs(mant), 1e-300)) > _LOG_HUGE:
        raise EvaluationOverflow(
            f"Theta_q overflow at |z|={abs(zc):g}, q={_as_q(q):g} (log magnitude {scale:.1f})")
    return mant * math.exp(scale)


def theta_delta_log(z: complex, q, tail_tolerance: float = 1e-14) -> tuple[complex, float]:
    """Scaled (delta Theta_q)(z) = sum_l l q^{-l(l+1)/2} z^l (term-differentiated)."""
    qv = _as_q(q)
    zc = complex(z)
    lnq = math.log(qv)
    ln_z = cmath.log(zc)
    l_star = ln_z.real / lnq - 0.5
    half = int(math.ceil(math.sqrt(2.0 * max(-math.log(tail_tolerance), 1.0) / lnq))) + 6
    lo = int(math.floor(l_star)) - half
    hi = int(math.ceil(l_star)) + half
    ls = np.arange(lo, hi + 1, dtype=float)
    log_terms = -ls * (ls + 1.0) / 2.0 * lnq + ls * ln_z
    peak = float(np.max(log_terms.real))
    mantissa = complex(np.sum(ls * np.exp(log_terms - peak)))
    return mantissa, peak


def _nearest_spiral_point(w: complex, q: float) -> complex:
    """Nearest point of -q^Z to w (where Theta_q vanishes)."""
    n = round(math.log(abs(w)) / math.log(q))
    return -(q ** n)


@dataclass(frozen=True)
class ThetaEvaluator:
    """Theta_q and the derived Lambda_{q,a}, l_q at a fixed q > 1."""

    q: float
    tail_tolerance: float = 1e-14
    pole_tolerance: float = 1e-8

    def __post_init__(self):
        _as_q(self.q)

    def theta(self, z) -> complex:
        return theta(z, self.q, self.tail_tolerance)

    def _check_zero_proximity(self, w: complex, what: str) -> None:
        s = _nearest_spiral_point(w, self.q)
        if abs(w - s) < self.pole_tolerance * abs(s):
            raise PoleProximityError(
                f"{what}: argument {w:g} within {self.pole_tolerance:g} (relative) of the "
                f"Theta_q zero at {s:g}")

    def lambda_qa(self, z: LogPoint | complex, a: complex) -> complex:
        """Lambda_{q,a}(z) = Theta_q(z)/Theta_q(z/a); sigma_q-eigenvalue a."""
        if a == 0:
            raise ValueError("Lambda_{q,a} needs a != 0")
        zc = z.to_complex() if isinstance(z, LogPoint) else complex(z)
        if a == 1.0:
            return 1.0 + 0.0j
        self._check_zero_proximity(zc / a, "Lambda_{q,a}")
        m1, s1 = theta_log(zc, self.q, self.tail_tolerance)
        m2, s2 = theta_log(zc / a, self.q, self.tail_tolerance)
        return (m1 / m2) * math.exp(s1 - s2)

    def lambda_qa_log(self, z: complex, a: complex) -> complex:
        if a == 1.0:
            return 0.0 + 0.0j
        self._check_zero_proximity(complex(z) / a, "Lambda_{q,a}")
        m1, s1 = theta_log(complex(z), self.q, self.tail_tolerance)
        m2, s2 = theta_log(complex(z) / a, self.q, self.tail_tolerance)
        return cmath.log(m1 / m2) + (s1 - s2)

    def l_q(self, z: LogPoint | complex) -> complex:
        """l_q = delta Theta_q / Theta_q, satisfying sigma_q l_q = l_q + 1."""
        zc = z.to_complex() if isinstance(z, LogPoint) else complex(z)
        self._check_zero_proximity(zc, "l_q")
        m1, s1 = theta_delta_log(zc, self.q, self.tail_tolerance)
        m2, s2 = theta_log(zc, self.q, self.tail_tolerance)
        return (m1 / m2) * math.exp(s1 - s2)


# ---------------------------------------------------------------------------
# q-exponentials
# ---------------------------------------------------------------------------


def qexp_entire_log(w, base: float):
    """log of the entire q-exponential prod_{n>=0}(1 + (Q-1) Q^{-n-1} w), Q > 1.

    Vectorized over w (ndarray or scalar); returns log values elementwise.
    Values exactly on the zero spiral Q^{N*}/(1-Q) produce -inf cleanly.
    """
    Q = float(base)
    if not Q > 1.0:
        raise ValueError("entire q-exponential needs base > 1")
    arr = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.zeros_like(arr)
    wmax = float(np.max(np.abs(arr))) if arr.size else 0.0
    if wmax > 0.0:
        lnQ = math.log(Q)
        nmax = max(1, int(math.ceil((math.log((Q - 1.0) * wmax) + 19.0 * math.log(10)) / lnQ)) + 2)
        factors = (Q - 1.0) * Q ** (-np.arange(1, nmax + 1, dtype=float))
        step = 2048
        with np.errstate(divide="ignore", invalid="ignore"):
            for lo in range(0, nmax, step):
                out += np.log(1.0 + np.multiply.outer(arr, factors[lo:lo + step])).sum(axis=-1)
    if np.isscalar(w) or np.asarray(w).ndim == 0:
        return complex(out[0])
    return out


def qexp_entire(w: complex, base: float) -> complex:
    lg = qexp_entire_log(w, base)
    if lg.real > _LOG_HUGE:
        raise EvaluationOverflow(f"e_Q overflow: log magnitude {lg.real:.1f}")
    return cmath.exp(lg)


def qexp_disk(w: complex, base: float, tolerance: float = 1e-16,
              radius_margin: float = 0.9) -> complex:
    """Series q-exponential sum w^n/[n]_P!, P < 1, on |w| < margin/(1-P)."""
    P = float(base)
    if not 0.0 < P < 1.0:
        raise ValueError("disk q-exponential needs base in (0,1)")
    wc = complex(w)
    radius = 1.0 / (1.0 - P)
    if abs(wc) >= radius_margin * radius:
        raise ValueError(
            f"|w|={abs(wc):g} outside the safe disk {radius_margin:g}*{radius:g} of e_p")
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for n in range(1, 100000):
        bracket = (1.0 - P ** n) / (1.0 - P)
        term = term * wc / bracket
        total += term
        if abs(term) < tolerance * abs(total):
            break
    return total


@dataclass(frozen=True)
class QExponentialEvaluator:
    """Dispatches e_base between the entire product (base>1) and the disk
    series (base<1); e_{p^l} with l < 0 lands in the entire regime."""

    base: float
    tolerance: float = 1e-16
    radius_margin: float = 0.9

    def __post_init__(self):
        if self.base <= 0.0 or self.base == 1.0:
            raise ValueError("q-exponential base must be positive and != 1")

    @property
    def mode(self) -> str:
        return "entire" if self.base > 1.0 else "disk"

    def __call__(self, w: complex) -> complex:
        if self.base > 1.0:
            return qexp_entire(w, self.base)
        return qexp_disk(w, self.base, self.tolerance, self.radius_margin)

    def log(self, w):
        if self.base > 1.0:
            return qexp_entire_log(w, self.base)
        return cmath.log(self(w))


def qexp(w: complex, base: float) -> complex:
    return QExponentialEvaluator(float(base))(w)


# ---------------------------------------------------------------------------
# q-Gamma
# ---------------------------------------------------------------------------


def gamma_p(x: complex, p: float, factor_tolerance: float = 1e-15) -> complex:
    """Gamma_p(x) = (1-p)^{1-x} prod_n (1-p^{n+1})/(1-p^{n+x}), 0 < p < 1.

    The product is cut once its factors sit within factor_tolerance of 1;
    it converges to the classical Gamma as p -> 1.
    """
    pv = float(p)
    if not 0.0 < pv < 1.0:
        raise ValueError("gamma_p needs p in (0,1)")
    xc = complex(x)
    nmax = max(8, int(math.ceil(-math.log(factor_tolerance) / -math.log(pv))) + 4)
    n = np.arange(nmax, dtype=float)
    num = 1.0 - pv ** (n + 1.0)
    den = 1.0 - np.exp((n + xc) * math.log(pv))
    small = np.abs(den) < 1e-280
    if np.any(small):
        k = int(np.argmax(small))
        raise PoleProximityError(f"Gamma_p pole: 1 - p^(n+x) vanishes at n={k}, x={xc}")
    value = complex(np.prod(num / den))
    return cmath.exp((1.0 - xc) * math.log(1.0 - pv)) * value


def gamma(x: complex) -> complex:
    """Classical Gamma (library-backed); poles surface as inf/nan from scipy."""
    val = complex(classical_gamma(complex(x)))
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise PoleProximityError(f"Gamma pole at x={x}")
    return val

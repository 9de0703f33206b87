"""The built-in invariant suite behind `qconfluence verify`.

Each check returns (name, passed, detail).  Tolerances are the documented
base values times the config's tolerance scale; very small q-1 needs a
larger scale because the theta/product evaluations accumulate roundoff
proportional to the spiral lengths (see README for the table).
"""

from __future__ import annotations

import cmath
import math
from typing import Callable, List, Tuple

import numpy as np

from .config import ExperimentConfig
from .domain import LogPoint, power, ramify
from .operators import (FactoredQOperator, SeriesQCoefficient,
                        check_nonresonance, formal_gauge, gauge_residual)
from .qfunctions import (ThetaEvaluator, gamma_p, qexp_entire,
                         theta_argument_bound)
from .quadrature import IntegrandFn, jackson_improper, q_laplace_discrete
from .registry import get_example
from .series import LaurentSeries, q_borel
from .solutions import DiagonalSolutionFamily, DifferentialFundamentalMatrix, QFundamentalMatrix
from .summation import admissible_direction

Check = Tuple[str, bool, str]


def _random_points(rng, n, r_lo=0.2, r_hi=2.0, arg_cap=math.pi):
    return [LogPoint(r_lo + (r_hi - r_lo) * rng.random(),
                     arg_cap * (2.0 * rng.random() - 1.0)) for _ in range(n)]


def run_suite(cfg: ExperimentConfig, inject_resonant: bool = False) -> List[Check]:
    rng = np.random.RandomState(20240814)
    scale = cfg.tol_scale
    qs = tuple(sorted(set(cfg.q_values) | {1.1, 2.0}))
    checks: List[Check] = []

    def add(name: str, fn: Callable[[], Tuple[bool, str]]) -> None:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure with its message
            ok, detail = False, f"exception: {exc}"
        checks.append((name, ok, detail))

    def chk_domain():
        worst = 0.0
        for _ in range(50):
            z = LogPoint(0.3 + rng.random(), -6 + 12 * rng.random())
            b = 0.2 + 2 * rng.random()
            c = 0.2 + 2 * rng.random()
            lhs = ramify(b, ramify(c, z))
            rhs = ramify(b * c, z)
            worst = max(worst, abs(lhs.modulus - rhs.modulus) / rhs.modulus,
                        abs(lhs.argument - rhs.argument))
            a1, a2 = complex(rng.randn(), rng.randn()), complex(rng.randn(), rng.randn())
            pw = abs(power(z, a1 + a2) - power(z, a1) * power(z, a2))
            worst = max(worst, pw / max(abs(power(z, a1 + a2)), 1e-30))
        return worst < 1e-12 * scale, f"max deviation {worst:.2e}"

    add("domain.composition", chk_domain)

    def chk_theta():
        # compared in scaled form: the raw values overflow doubles for very
        # small q-1 even though the functional equation is perfectly healthy
        from .qfunctions import theta_log
        worst = 0.0
        for q in qs:
            cap = 0.9 * theta_argument_bound(q, 1e-11)
            for z in _random_points(rng, 12, 0.3, 1.5, cap):
                zc = z.to_complex()
                m1, s1 = theta_log(q * zc, q)
                m2, s2 = theta_log(zc, q)
                ratio = m1 / (zc * m2) * math.exp(s1 - s2)
                worst = max(worst, abs(ratio - 1.0))
        return worst < 1e-10 * scale, f"max relative residual {worst:.2e}"

    add("theta.functional_equation", chk_theta)

    def chk_lambda_lq():
        worst = 0.0
        for q in qs:
            th = ThetaEvaluator(q)
            cap = max(0.05, 0.85 * theta_argument_bound(q, 1e-11) - 0.1)
            for z in _random_points(rng, 6, 0.3, 1.2, cap):
                zc = z.to_complex()
                # subscripts near 1, the family the solutions actually use
                a = cmath.exp(complex(0.3 * rng.randn(), 0.08 * rng.randn()) * (q - 1.0))
                lhs = th.lambda_qa(q * zc, a)
                rhs = a * th.lambda_qa(zc, a)
                worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
                dl = th.l_q(q * zc) - th.l_q(zc)
                worst = max(worst, abs(dl - 1.0))
        return worst < 1e-10 * scale, f"max residual {worst:.2e}"

    add("theta.lambda_and_lq", chk_lambda_lq)

    def chk_qexp():
        worst = 0.0
        for q in qs:
            for z in _random_points(rng, 8, 0.2, 1.5):
                zc = z.to_complex()
                lhs = qexp_entire(q * zc, q)
                rhs = (1.0 + (q - 1.0) * zc) * qexp_entire(zc, q)
                worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
            p = 1.0 / q
            x = 2.5
            lhs = gamma_p(x + 1.0, p)
            rhs = (1.0 - p ** x) / (1.0 - p) * gamma_p(x, p)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        return worst < 1e-10 * scale, f"max residual {worst:.2e}"

    add("qexp.gamma_p.functional_equations", chk_qexp)

    def chk_jackson():
        worst = 0.0
        q = 1.5
        z = LogPoint(0.7, 0.4)
        for s in (0, 1, 2, 5):
            f = IntegrandFn(lambda t, s=s: power(t, s))
            rep = jackson_improper(f, z, q, tol=1e-14)
            expected = power(z, s + 1) * (q - 1.0) / (q ** (s + 1) - 1.0)
            worst = max(worst, abs(rep.value - expected) / abs(expected))
        return worst < 1e-12 * scale, f"max monomial error {worst:.2e}"

    add("jackson.monomial_law", chk_jackson)

    def chk_qlaplace():
        coeffs = rng.randn(11)
        terms = [(n, complex(c)) for n, c in enumerate(coeffs)]
        poly = LaurentSeries.from_terms([(e, c) for e, c in terms if e >= 1], 16)
        worst = 0.0
        for q in (1.5, 1.1):
            for level in (1, 2):
                b = q_borel(poly, level, q)
                bfn = IntegrandFn(lambda t, b=b: b.evaluate(t.to_complex()))
                z = LogPoint(0.4, 0.3)
                val = q_laplace_discrete(bfn, z, level, q)
                ref = poly.evaluate(z.to_complex())
                worst = max(worst, abs(val - ref) / max(abs(ref), 1e-30))
        return worst < 1e-9 * scale, f"max round-trip error {worst:.2e}"

    add("qlaplace.borel_round_trip", chk_qlaplace)

    def chk_gauge():
        worst = 0.0
        for name in ("sec3-m2", "sec43"):
            ex = get_example(name)
            for q in (1.3, 1.1):
                fams = ex.family(q, "registry")
                op = FactoredQOperator(tuple(fams), q)
                g = formal_gauge(op, order=16)
                worst = max(worst, gauge_residual(g, op))
        return worst < 1e-12 * scale, f"max gauge residual {worst:.2e}"

    add("gauge.defining_identity", chk_gauge)

    def chk_directions():
        ex = get_example("sec43")
        sec = admissible_direction(ex.diff_op)
        want = [(math.pi / 2, 3 * math.pi / 4), (5 * math.pi / 4, 3 * math.pi / 2)]
        err = max(abs(a - wa) + abs(b - wb)
                  for (a, b), (wa, wb) in zip(sorted(sec.intervals), want))
        return err < 1e-12, f"interval endpoint error {err:.2e}"

    add("directions.worked_example", chk_directions)

    def chk_residuals():
        ex = get_example("sec43")
        q = min(cfg.q_values)
        fam = DiagonalSolutionFamily(ex.diff_op, ex.family(q, "registry"), q)
        qm = QFundamentalMatrix(fam)
        z = LogPoint(0.9, 0.1)
        rq = qm.residual(z)
        dm = DifferentialFundamentalMatrix(ex.diff_op, 0.0, None)
        rd = dm.residual(z)
        ok = rq < 1e-9 * scale and rd < 1e-6 * scale
        return ok, f"q-residual {rq:.2e}, differential residual {rd:.2e}"

    add("solutions.system_residuals", chk_residuals)

    def chk_nonres_detector():
        # a synthetic family with equal valuations and t0 ratio q^2 must fail
        q = 1.3
        s1 = LaurentSeries.from_terms([(0, q ** 2), (1, 1.0)])
        s2 = LaurentSeries.from_terms([(0, 1.0), (1, 2.0)])
        op = FactoredQOperator((SeriesQCoefficient(s1), SeriesQCoefficient(s2)), q)
        rep = check_nonresonance(op)
        ok = (not rep.passed) and rep.failures and rep.failures[0][2] == 2
        return bool(ok), f"witness {rep.failures[0] if rep.failures else None}"

    add("nonresonance.detects_witness", chk_nonres_detector)

    if inject_resonant:
        def chk_injected():
            q = 1.3
            s1 = LaurentSeries.from_terms([(0, q ** 2), (1, 1.0)])
            s2 = LaurentSeries.from_terms([(0, 1.0), (1, 2.0)])
            op = FactoredQOperator((SeriesQCoefficient(s1), SeriesQCoefficient(s2)), q)
            formal_gauge(op, order=8)   # must raise; reaching the return is the failure
            return False, "resonant operator was not rejected"

        add("nonresonance.injected_operator", chk_injected)

    return checks

"""qconfluence: meromorphic solutions of factored q-difference systems and
their q -> 1 confluence to Borel-Laplace-summed solutions of factored
linear differential operators."""

__version__ = "0.1.0"

from .domain import LogPoint, QParam, SectorDomain, dilate, power, ramify
from .series import (LaurentPolynomial, LaurentSeries, RationalLaurent,
                     empirical_radius, formal_borel, leading, q_borel,
                     q_borel_deform_coeffs, split_parts, valuation)
from .qfunctions import (QExponentialEvaluator, ThetaEvaluator, gamma, gamma_p,
                         qexp, qexp_disk, qexp_entire, theta,
                         theta_argument_bound)
from .quadrature import (IntegrandFn, QuadratureReport, jackson_improper,
                         jackson_partial, laplace, laplace_log_primitive,
                         q_laplace_discrete, ray_integral)
from .operators import (CompanionMatrix, FactoredDifferentialOperator,
                        FactoredQOperator, FormalGauge, build_companion,
                        check_nonresonance, formal_gauge, gauge_residual)
from .summation import (AdmissibleSector, BorelImage, admissible_direction,
                        get_borel_image, make_rational_image, sum_in_direction)
from .deformation import (QCoefficientFamily, build_q_family, combine,
                          deform_nonpositive, deform_positive)
from .solutions import (ConfluenceReport, ConnectionConstant,
                        DiagonalSolutionFamily, DifferentialFundamentalMatrix,
                        QFundamentalMatrix, confluence_error)
from .registry import example_names, get_example, make_grid

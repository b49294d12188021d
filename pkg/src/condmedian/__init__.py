"""Numerical laboratory for optimal Bayes estimators under L^p loss.

Submodules: ``specfun`` (special functions), ``models`` (priors and noise
channels), ``posterior`` (posteriors and estimators), ``linearity``
(linearity residuals, the signed-kernel operator, ``f_p``), ``risk``
(Bayes risk of linear estimators) and ``cli`` (batch runner).
"""

from .errors import CondMedianError, DomainError, InvalidArgumentError, ModelError, NumericalError
from .models import (
    CounterexampleParams,
    Gamma,
    Gaussian,
    GaussianAdditive,
    GridDensity,
    NaturalExpFamily,
    PointMass,
    Poisson,
    TwoPoint,
    counterexample_prior,
    matched_gaussian_prior,
    nef_matched_prior,
    prior_moments,
)
from .posterior import (
    PosteriorGrid,
    cond_lp_estimator,
    cond_mean,
    cond_median,
    posterior_third_cumulant,
)
from .roots import RootSet

__all__ = [
    "CondMedianError",
    "CounterexampleParams",
    "DomainError",
    "Gamma",
    "Gaussian",
    "GaussianAdditive",
    "GridDensity",
    "InvalidArgumentError",
    "ModelError",
    "NaturalExpFamily",
    "NumericalError",
    "PointMass",
    "Poisson",
    "PosteriorGrid",
    "RootSet",
    "TwoPoint",
    "cond_lp_estimator",
    "cond_mean",
    "cond_median",
    "counterexample_prior",
    "matched_gaussian_prior",
    "nef_matched_prior",
    "posterior_third_cumulant",
    "prior_moments",
]

__version__ = "0.1.0"

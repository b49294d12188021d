"""
A non-Gaussian prior with a linear L^4 estimator
================================================

For p > 2 the function f_p has positive roots.  Each root gives a cosine
frequency for which the modulated Gaussian below has a linear optimal
estimator under |x - t|^p loss, while its median is not linear.
"""

import math

import numpy as np

from condmedian.linearity import (
    counterexample_frequency,
    fp_roots,
    lp_linearity_residual,
    median_linearity_residual,
)
from condmedian.models import CounterexampleParams, GaussianAdditive, counterexample_prior
from condmedian.posterior import cond_lp_estimator, cond_median, posterior
from condmedian.specfun import hermite_zeros

# roots of f_p: none up to p = 2, then one more for every step of 2 in p
for p in (1.5, 2.0, 3.0, 4.0, 7.0):
    print(f"p = {p}: positive roots {np.round(fp_roots(p).roots, 6).tolist()}")

# for even p the roots are sqrt(2) times the positive Hermite zeros
print("sqrt(2) * He_3 zeros:", math.sqrt(2) * hermite_zeros(3).roots[-1], " sqrt(6):", math.sqrt(6))

a = 0.5
omega = counterexample_frequency(4.0)
prior = counterexample_prior(CounterexampleParams(a, rho=1.0, theta=0.0, omega=omega))

y = np.linspace(-3, 3, 13)
print("L^4 residual sup-norm:   ", lp_linearity_residual(prior, a, 4.0, y).sup_norm)
print("median residual sup-norm:", median_linearity_residual(prior, a, y).sup_norm)

print("  y    L^4 estimate   a*y     median")
for v in (-2.0, -1.0, 0.0, 1.0, 2.0):
    post = posterior(prior, GaussianAdditive(), v)
    print(f"{v:4.1f}  {cond_lp_estimator(post, 4.0):11.7f}  {a * v:6.2f}  {cond_median(post):9.5f}")

# nudging the frequency off the root breaks linearity
off = counterexample_prior(CounterexampleParams(a, 1.0, 0.0, omega + 0.3))
print("perturbed frequency, L^4 residual:", lp_linearity_residual(off, a, 4.0, y).sup_norm)

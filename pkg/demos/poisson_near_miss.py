"""
Gamma prior, Poisson observations
=================================

Median and mean of the Gamma posterior, and how far the median sits
from a straight line as the count grows.
"""

import numpy as np

from condmedian.models import Gamma, Poisson
from condmedian.posterior import cond_mean, cond_median, gamma_poisson_median, posterior

prior = Gamma(1.0, 1.0)
ys = np.arange(0, 21)

print(" y      mean      median    median-mean   closed form")
for y in ys:
    post = posterior(prior, Poisson(), int(y))
    m, md = cond_mean(post), cond_median(post)
    print(f"{y:2d}  {m:9.6f}  {md:9.6f}  {md - m:+.6f}   {gamma_poisson_median(1.0, 1.0, int(y)):9.6f}")

# The mean is exactly (1 + y)/2.  The median gap settles near -1/6, so the
# median is affine only in the limit of large counts.

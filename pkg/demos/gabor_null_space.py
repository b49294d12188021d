"""
Gabor wavelets and the signed kernel operator
=============================================

T_a f(y) = int sign(x - a y) phi(y - x) f(x) dx maps Gaussian-windowed
exponentials to closed forms involving the complex error function.  Zeros
of erf give wavelets that T_a sends to zero.
"""

import numpy as np

from condmedian.linearity import GaborParams, apply_Ta, gabor_closed_form, gabor_null_member
from condmedian.specfun import erf_complex, erf_zero

a = 0.5
w = GaborParams(mu=0.3, sigma2=1.0, omega=2.0)
for y in (-1.0, 0.0, 1.0, 2.0):
    num, cf = apply_Ta(w, a, y), gabor_closed_form(w, a, y)
    print(f"y = {y:4.1f}  quadrature {num:.12f}  closed form {cf:.12f}")

for n in (1, 2, 3):
    z = erf_zero(n)
    f = gabor_null_member(a, n)
    worst = max(abs(apply_Ta(f, a, y, window=(y - 20, y + 20))) for y in np.linspace(-3, 3, 31))
    print(f"zero {n}: z = {z:.10f}, |erf(z)| = {abs(erf_complex(z)):.1e}, "
          f"mu = {f.mu:.5f}, omega = {f.omega:.5f}, max |T_a f| = {worst:.1e}")

# the real part alone is a real-valued function in the null space too
f = gabor_null_member(a, 1)
print("real part:", max(abs(apply_Ta(lambda x: np.real(f(x)), a, y, window=(y - 20, y + 20))) for y in np.linspace(-3, 3, 31)))

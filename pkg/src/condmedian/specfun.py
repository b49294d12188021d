"""Special functions: normal pdf/cdf, Dawson, complex erf, Hermite, incomplete gamma.

Scalar arguments return Python floats/complex; numpy arrays are accepted
element-wise where noted.
"""

from __future__ import annotations

import cmath
import math
from statistics import NormalDist

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import DomainError, InvalidArgumentError
from .roots import RootSet

SQRT_2PI = math.sqrt(2.0 * math.pi)
TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
DAWSON_MAX = 0.5410442246351817  # attained at x = 0.9241388730...
ERF_DOMAIN = 30.0
HERMITE_MAX_DEGREE = 50

# Leading zeros of erf in the first quadrant, 10 significant digits.
ERF_ZEROS = (
    complex(1.4506161632, 1.8809430002),
    complex(2.2446592738, 2.6165751407),
    complex(2.8397410469, 3.1756280996),
)


def _check_finite(x, name="x"):
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite, got {x!r}")
    return arr


# ---------------------------------------------------------------------------
# standard normal


def std_normal(x):
    """Return ``(pdf, cdf)`` of the standard normal at ``x`` (scalar or array)."""
    arr = _check_finite(x).astype(float)
    pdf = np.exp(-0.5 * arr * arr) / SQRT_2PI
    # erfc keeps full relative accuracy in the left tail
    cdf = 0.5 * _erfc_real(-arr / math.sqrt(2.0))
    if arr.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def _erfc_real(t):
    return np.vectorize(math.erfc, otypes=[float])(t)


# ---------------------------------------------------------------------------
# Dawson function

_DAWSON_H = 0.2
_DAWSON_TERMS = 20
_DAWSON_C = np.exp(-(((2 * np.arange(_DAWSON_TERMS) + 1) * _DAWSON_H) ** 2))


def _dawson_series(x):
    # D(x) = sum_n (-1)^n 2^n x^(2n+1) / (2n+1)!!
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, 40):
        term = term * (-2.0 * x2) / (2 * n + 1)
        total = total + term
    return total


def _dawson_rybicki(x):
    ax = np.abs(x)
    n0 = 2.0 * np.floor(0.5 * ax / _DAWSON_H + 0.5)
    xp = ax - n0 * _DAWSON_H
    e1 = np.exp(2.0 * xp * _DAWSON_H)
    e2 = e1 * e1
    d1 = n0 + 1.0
    d2 = d1 - 2.0
    total = np.zeros_like(ax)
    for c in _DAWSON_C:
        total += c * (e1 / d1 + 1.0 / (d2 * e1))
        d1 += 2.0
        d2 -= 2.0
        e1 = e1 * e2
    return np.sign(x) * np.exp(-xp * xp) * total / math.sqrt(math.pi)


def _dawson_asymptotic(x):
    # D(x) ~ 1/(2x) * sum_k (2k-1)!! / (2x^2)^k
    inv = 1.0 / (2.0 * x * x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 12):
        term = term * (2 * k - 1) * inv
        total = total + term
    return total / (2.0 * x)


def dawson(x):
    """Dawson's integral ``exp(-x^2) * int_0^x exp(t^2) dt`` (scalar or array)."""
    arr = _check_finite(x).astype(float)
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    ax = np.abs(flat)
    small = ax < 1.0
    large = ax >= 10.0
    mid = ~(small | large)
    if small.any():
        out[small] = _dawson_series(flat[small])
    if mid.any():
        out[mid] = _dawson_rybicki(flat[mid])
    if large.any():
        out[large] = _dawson_asymptotic(flat[large])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


# ---------------------------------------------------------------------------
# Faddeeva function and complex erf


def faddeeva(z: complex) -> complex:
    """``w(z) = exp(-z^2) erfc(-iz)`` for ``Im z >= 0``.

    Region-switched evaluation: a Taylor series near the origin, Laplace's
    continued fraction far out, and the Gautschi truncated continued fraction
    with a Taylor correction in between (Poppe & Wijers' scheme).
    """
    xi, yi = z.real, z.imag
    if yi < 0:
        raise DomainError("faddeeva() is only evaluated in the closed upper half plane")
    xabs, yabs = abs(xi), yi
    x, y = xabs / 6.3, yabs / 4.4
    qrho = x * x + y * y
    xquad = xabs * xabs - yabs * yabs
    yquad = 2.0 * xabs * yabs

    if qrho < 0.085264:
        qrho = (1.0 - 0.85 * y) * math.sqrt(qrho)
        n = int(round(6 + 72 * qrho))
        j = 2 * n + 1
        xsum, ysum = 1.0 / j, 0.0
        for i in range(n, 0, -1):
            j -= 2
            xaux = (xsum * xquad - ysum * yquad) / i
            ysum = (xsum * yquad + ysum * xquad) / i
            xsum = xaux + 1.0 / j
        u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0
        v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs)
        daux = math.exp(-xquad)
        u2 = daux * math.cos(yquad)
        v2 = -daux * math.sin(yquad)
        u = u1 * u2 - v1 * v2
        v = u1 * v2 + v1 * u2
    else:
        if qrho > 1.0:
            h = 0.0
            kapn = 0
            qrho = math.sqrt(qrho)
            nu = int(3 + (1442.0 / (26.0 * qrho + 77.0)))
        else:
            qrho = (1.0 - y) * math.sqrt(1.0 - qrho)
            h = 1.88 * qrho
            kapn = int(round(7 + 34 * qrho))
            nu = int(round(16 + 26 * qrho))
        h2 = 2.0 * h
        qlambda = h2**kapn if h > 0 else 0.0
        rx = ry = sx = sy = 0.0
        for n in range(nu, -1, -1):
            np1 = n + 1
            tx = yabs + h + np1 * rx
            ty = xabs - np1 * ry
            c = 0.5 / (tx * tx + ty * ty)
            rx, ry = c * tx, c * ty
            if h > 0 and n <= kapn:
                tx = qlambda + sx
                sx, sy = rx * tx - ry * sy, ry * tx + rx * sy
                qlambda /= h2
        if h == 0:
            u, v = TWO_OVER_SQRT_PI * rx, TWO_OVER_SQRT_PI * ry
        else:
            u, v = TWO_OVER_SQRT_PI * sx, TWO_OVER_SQRT_PI * sy
        if yabs == 0:
            u = math.exp(-xabs * xabs)
    if xi < 0:
        v = -v
    return complex(u, v)


def _erf_maclaurin(z: complex) -> complex:
    z2 = z * z
    term = z
    total = z
    n = 0
    while True:
        n += 1
        term = -term * z2 / n
        add = term / (2 * n + 1)
        total += add
        if abs(add) <= 1e-17 * abs(total) or n > 200:
            break
    return TWO_OVER_SQRT_PI * total


def _erf_scalar(z: complex) -> complex:
    z = complex(z)
    re, im = z.real, z.imag
    if not (math.isfinite(re) and math.isfinite(im)):
        raise InvalidArgumentError(f"erf argument must be finite, got {z!r}")
    if abs(re) > ERF_DOMAIN or abs(im) > ERF_DOMAIN:
        raise DomainError(f"erf_complex is only supported for |Re z|, |Im z| <= {ERF_DOMAIN}")
    if re < 0 or (re == 0 and im < 0):
        return -_erf_scalar(-z)
    if abs(z) < 1.5:
        return _erf_maclaurin(z)
    # erf z = 1 - exp(-z^2) w(iz); Re z >= 0 puts iz in the upper half plane
    w = faddeeva(complex(-im, re))
    log_mag = (im * im - re * re) + math.log(abs(w)) if w != 0 else -math.inf
    if log_mag > 709.0:
        phase = cmath.phase(w) - 2.0 * re * im
        return complex(-math.copysign(math.inf, math.cos(phase)), -math.copysign(math.inf, math.sin(phase)))
    if im * im - re * re > 700.0:
        return 1.0 - cmath.exp(-z * z + cmath.log(w))
    return 1.0 - cmath.exp(-z * z) * w


def erf_complex(z):
    """Error function of a complex argument (scalar or array).

    Accurate to about 1e-13 relative on ``|Re z|, |Im z| <= 30``; values whose
    magnitude exceeds the float range come back as infinities.
    """
    if np.ndim(z) == 0:
        return _erf_scalar(complex(z))
    return np.vectorize(_erf_scalar, otypes=[complex])(np.asarray(z, dtype=complex))


def erf_zero(n: int, tol: float = 1e-15) -> complex:
    """The ``n``-th zero (1-based, first quadrant) of erf, polished by Newton's method."""
    if not 1 <= n <= len(ERF_ZEROS):
        raise InvalidArgumentError(f"only the first {len(ERF_ZEROS)} zeros are tabulated")
    z = ERF_ZEROS[n - 1]
    for _ in range(20):
        step = _erf_scalar(z) / (TWO_OVER_SQRT_PI * cmath.exp(-z * z))
        z -= step
        if abs(step) < tol * abs(z):
            break
    return z


# ---------------------------------------------------------------------------
# probabilist's Hermite polynomials


def hermite_prob(n: int) -> np.ndarray:
    """Coefficients of ``He_n`` in ascending degree."""
    n = _check_hermite_degree(n)
    prev, cur = [1], [0, 1]
    if n == 0:
        return np.array(prev, dtype=float)
    for k in range(1, n):
        # He_{k+1} = x He_k - k He_{k-1}; integer arithmetic keeps it exact
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= k * c
        prev, cur = cur, nxt
    return np.array(cur, dtype=float)


def _check_hermite_degree(n) -> int:
    if int(n) != n or n < 0:
        raise InvalidArgumentError(f"degree must be a nonnegative integer, got {n!r}")
    if n > HERMITE_MAX_DEGREE:
        raise DomainError(f"degree {n} exceeds the supported maximum {HERMITE_MAX_DEGREE}")
    return int(n)


def hermite_eval(n: int, x):
    """``(He_n(x), He_n'(x))`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(1, n):
        p0, p1 = p1, x * p1 - k * p0
    return p1, n * p0


def hermite_zeros(n: int) -> RootSet:
    """Zeros of ``He_n``: eigenvalues of the symmetric Jacobi matrix plus a Newton step."""
    n = _check_hermite_degree(n)
    if n == 0:
        return RootSet(np.empty(0))
    off = np.sqrt(np.arange(1, n, dtype=float))
    jac = np.diag(off, 1) + np.diag(off, -1)
    r = np.sort(np.linalg.eigvalsh(jac))
    val, der = hermite_eval(n, r)
    r = r - val / der
    if n % 2 == 1:
        r[n // 2] = 0.0
    r = 0.5 * (r - r[::-1])  # exact symmetry about 0
    val, der = hermite_eval(n, r)
    gaps = np.diff(r) if n > 1 else np.array([1.0])
    delta = np.minimum(1e-6, 0.25 * gaps.min()) * np.maximum(1.0, np.abs(r))
    brackets = np.column_stack([r - delta, r + delta])
    return RootSet(r, brackets, np.abs(val))


# ---------------------------------------------------------------------------
# incomplete gamma


def lower_gamma_regularized(s: float, t: float) -> float:
    """Regularized lower incomplete gamma ``P(s, t)``."""
    return float(gammainc(s, t))


def _gamma_log_pdf(s: float, t: float) -> float:
    return (s - 1.0) * math.log(t) - t - float(gammaln(s))


def inv_lower_gamma(s: float, p: float, tol: float = 1e-14) -> float:
    """Return ``t`` with ``P(s, t) = p`` (bracketed Newton, bisection fallback)."""
    if not (math.isfinite(s) and s > 0):
        raise InvalidArgumentError(f"shape must be positive and finite, got {s!r}")
    if not (math.isfinite(p) and 0.0 < p < 1.0):
        raise InvalidArgumentError(f"probability must lie in (0, 1), got {p!r}")

    # Wilson-Hilferty start; small-t series start when it is not usable
    z = NormalDist().inv_cdf(p)
    t = s * (1.0 - 1.0 / (9.0 * s) + z / (3.0 * math.sqrt(s))) ** 3
    if not t > 0 or s < 1.0:
        t = math.exp((math.log(p) + float(gammaln(s + 1.0))) / s)

    lo, hi = 0.0, max(t, 1.0)
    while lower_gamma_regularized(s, hi) < p:
        lo, hi = hi, 2.0 * hi
    if not lo < t < hi:
        t = 0.5 * (lo + hi)

    for _ in range(200):
        f = lower_gamma_regularized(s, t) - p
        if f == 0.0:
            return t
        if f < 0:
            lo = t
        else:
            hi = t
        dens = math.exp(_gamma_log_pdf(s, t))
        cand = t - f / dens if dens > 0 else math.nan
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if abs(cand - t) <= tol * max(t, 1e-300) or hi - lo <= tol * hi:
            t = cand
            break
        t = cand
    return t

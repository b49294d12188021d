"""Linearity residuals, the signed-kernel operator ``T_a``, Gabor wavelets and ``f_p``.

Kernel integrands here all have the form ``sign(x - c) * smooth``; every
quadrature puts ``c`` on a panel boundary so composite Gauss-Legendre stays
spectrally accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, InvalidArgumentError, NumericalError
from .models import (
    Gamma,
    Gaussian,
    GridDensity,
    PointMass,
    Prior,
    TwoPoint,
    canonical,
)
from .quadrature import breakpoints, integrate, left_singular_rule, panel_rule
from .roots import RootSet, scan_roots
from .specfun import SQRT_2PI, dawson, erf_complex, erf_zero

MEDIAN_TOL = 1e-6
KERNEL_REACH = 14.0  # phi(14) ~ 1e-43: the Gaussian kernel is negligible beyond
EQUIVALENCE_TOL = 1e-8
ENVELOPE_TOL = 1e-12
FP_SCAN_STEP = 0.05


@dataclass(frozen=True)
class LinearityReport:
    a: float
    p: float
    y: np.ndarray
    residuals: np.ndarray
    sup_norm: float
    verdict: bool
    tolerance: float

    @classmethod
    def build(cls, a: float, p: float, y, residuals, tolerance: float) -> "LinearityReport":
        if not tolerance > 0:
            raise InvalidArgumentError("tolerance must be positive")
        r = np.asarray(residuals, dtype=float)
        if not np.all(np.isfinite(r)):
            raise NumericalError("non-finite linearity residual")
        sup = float(np.max(np.abs(r))) if r.size else 0.0
        return cls(float(a), float(p), np.asarray(y, dtype=float), r, sup, sup <= tolerance, float(tolerance))


def _check_a(a: float, allow_zero: bool = True) -> float:
    a = float(a)
    ok = (0.0 <= a < 1.0) if allow_zero else (0.0 < a < 1.0)
    if not (math.isfinite(a) and ok):
        raise InvalidArgumentError(f"slope a={a!r} is outside the admissible interval")
    return a


def _phi(t):
    return np.exp(-0.5 * t * t) / SQRT_2PI


# ---------------------------------------------------------------------------
# residuals against a prior


def _prior_window(prior: Prior, y: float) -> tuple[float, float, float, Optional[np.ndarray]]:
    """Integration window, panel width and (for interpolated grids) forced nodes."""
    if isinstance(prior, Gaussian):
        s = prior.variance
        m = (s * y + prior.mean) / (1 + s)
        sd = math.sqrt(s / (1 + s))
        return m - KERNEL_REACH * sd, m + KERNEL_REACH * sd, min(0.25, sd / 2), None
    if isinstance(prior, Gamma):
        lo, hi = prior.window(14.0)
        lo, hi = max(lo, y - KERNEL_REACH), min(hi, y + KERNEL_REACH)
        return lo, max(hi, lo), 0.25, None
    if isinstance(prior, GridDensity):
        lo, hi = prior.window()
        lo, hi = max(lo, y - KERNEL_REACH), min(hi, y + KERNEL_REACH)
        hi = max(hi, lo)
        if prior.analytic is None:
            inner = prior.x[(prior.x > lo) & (prior.x < hi)]
            return lo, hi, 0.25, inner
        return lo, hi, 0.25, None
    raise InvalidArgumentError(f"unsupported prior {prior!r}")


def kernel_moment(prior: Prior, y: float, g: Callable[[np.ndarray], np.ndarray], cut: float) -> float:
    """``int g(x) phi(y - x) P(dx)`` where ``g`` may jump or kink at ``cut``."""
    prior = canonical(prior)
    if isinstance(prior, (PointMass, TwoPoint)):
        x, w = prior.atoms()
        return float(np.sum(w * g(x) * _phi(y - x)))
    lo, hi, width, forced = _prior_window(prior, y)
    if hi <= lo:
        return 0.0
    if forced is not None:
        # piecewise-linear density: use grid cells as panels, low order is exact enough
        br = np.union1d(np.concatenate(([lo, hi], forced)), [cut] if lo < cut < hi else [])
        x, w = panel_rule(br, order=6)
    else:
        x, w = panel_rule(breakpoints(lo, hi, width, (cut,)))
    return float(np.sum(w * g(x) * _phi(y - x) * prior.pdf(x)))


def lp_residual_at(prior: Prior, a: float, p: float, y: float) -> float:
    c = a * y
    if p == 1.0:
        return kernel_moment(prior, y, lambda x: np.sign(x - c), c)
    return kernel_moment(prior, y, lambda x: np.sign(x - c) * np.abs(x - c) ** (p - 1.0), c)


def median_linearity_residual(prior: Prior, a: float, y_grid: Sequence[float], tol: float = MEDIAN_TOL) -> LinearityReport:
    """Residual of ``E[sign(X - a y) phi(y - X)] = 0`` over ``y_grid``."""
    a = _check_a(a)
    y = np.asarray(y_grid, dtype=float)
    r = [lp_residual_at(prior, a, 1.0, v) for v in y]
    return LinearityReport.build(a, 1.0, y, r, tol)


def lp_linearity_residual(
    prior: Prior, a: float, p: float, y_grid: Sequence[float], tol: float = MEDIAN_TOL
) -> LinearityReport:
    """Residual of ``E[sign(X - a y)|X - a y|^(p-1) phi(y - X)] = 0`` over ``y_grid``."""
    a = _check_a(a)
    p = float(p)
    if not p >= 1:
        raise InvalidArgumentError("loss exponent p must be >= 1")
    y = np.asarray(y_grid, dtype=float)
    r = [lp_residual_at(prior, a, p, v) for v in y]
    return LinearityReport.build(a, p, y, r, tol)


# ---------------------------------------------------------------------------
# convolution form


def _rescaled_log_density(prior: Prior, a: float) -> Callable[[np.ndarray], np.ndarray]:
    """Log-density of ``mu(du) = exp((1-a)u^2/2) P(sqrt(a) du)``."""
    sa = math.sqrt(a)
    with np.errstate(divide="ignore"):
        logsa = math.log(sa)

    def logmu(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return 0.5 * (1.0 - a) * u * u + np.asarray(prior.logpdf(sa * u)) + logsa

    return logmu


def convolution_residual_at(prior: Prior, a: float, v: float) -> float:
    """``int sign(u - v) phi(v - u) mu(du)`` in the rescaled coordinate ``v``."""
    prior = canonical(prior)
    sa = math.sqrt(a)
    if isinstance(prior, (PointMass, TwoPoint)):
        x, w = prior.atoms()
        u = x / sa
        return float(np.sum(w * np.sign(u - v) * np.exp(0.5 * (1 - a) * u * u - 0.5 * (v - u) ** 2)) / SQRT_2PI)
    logmu = _rescaled_log_density(prior, a)
    reach = 20.0
    lo, hi = v - reach, v + reach
    if isinstance(prior, GridDensity) or isinstance(prior, Gamma):
        plo, phi_ = prior.window() if isinstance(prior, GridDensity) else (0.0, prior.window(14.0)[1])
        lo, hi = max(lo, plo / sa), min(hi, phi_ / sa)
    if hi <= lo:
        return 0.0
    x, w = panel_rule(breakpoints(lo, hi, 0.25, (v,)))
    le = logmu(x) - 0.5 * (v - x) ** 2
    peak = np.max(le)
    if not math.isfinite(peak):
        return 0.0
    # the integrand must have decayed at both window ends unless the prior's support ends there
    ends = logmu(np.array([lo, hi])) - 0.5 * (v - np.array([lo, hi])) ** 2
    open_end = np.array([lo == v - reach, hi == v + reach])
    if np.any(open_end & (ends - peak > math.log(ENVELOPE_TOL))):
        raise DomainError(f"rescaled measure does not decay on the window around v={v}")
    return float(np.sum(w * np.sign(x - v) * np.exp(le)) / SQRT_2PI)


def convolution_residual(prior: Prior, a: float, y_grid: Sequence[float], tol: float = MEDIAN_TOL) -> LinearityReport:
    """Convolution form of the median condition, evaluated at ``v = y``.

    The value at ``v`` equals ``exp((1-a) t^2/2)`` times the direct median
    residual at ``t = v / sqrt(a)``; the identity is checked node by node.
    """
    a = _check_a(a, allow_zero=False)
    v = np.asarray(y_grid, dtype=float)
    r = np.array([convolution_residual_at(prior, a, t) for t in v])
    t = v / math.sqrt(a)
    direct = np.array([lp_residual_at(prior, a, 1.0, s) for s in t])
    scaled = r * np.exp(-0.5 * (1 - a) * t * t)
    gap = np.max(np.abs(scaled - direct)) if v.size else 0.0
    if not gap <= EQUIVALENCE_TOL:
        raise NumericalError(f"convolution and direct residuals disagree by {gap:.3e}")
    return LinearityReport.build(a, 1.0, v, r, tol)


# ---------------------------------------------------------------------------
# operator T_a and Gabor wavelets


def apply_Ta(f: Callable[[np.ndarray], np.ndarray], a: float, y: float, window: Optional[tuple[float, float]] = None, width: float = 0.1) -> complex:
    """``T_a[f](y) = int sign(x - a y) phi(y - x) f(x) dx``."""
    a, y = float(a), float(y)
    lo, hi = window if window is not None else (y - KERNEL_REACH, y + KERNEL_REACH)
    x, w = panel_rule(breakpoints(lo, hi, width, (a * y,)))
    vals = np.asarray(f(x))
    return complex(np.sum(w * np.sign(x - a * y) * _phi(y - x) * vals))


@dataclass(frozen=True)
class GaborParams:
    """``f(x) = exp(-(x - mu)^2 / (2 sigma2)) exp(j omega x)``."""

    mu: float
    sigma2: float
    omega: float

    def __post_init__(self):
        vals = (self.mu, self.sigma2, self.omega)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgumentError("Gabor parameters must be finite")
        if self.sigma2 <= -1.0 or self.sigma2 == 0.0:
            raise InvalidArgumentError("sigma2 must lie in (-1, inf) and be nonzero")

    @property
    def b(self) -> float:
        return 1.0 + 1.0 / self.sigma2

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mu) ** 2 / self.sigma2 + 1j * self.omega * x)


def gabor_closed_form(params: GaborParams, a: float, y: float) -> complex:
    """Closed form of ``T_a`` applied to a Gabor wavelet.

    Only ``sigma2 > 0`` gives a convergent integral; ``sigma2`` in ``(-1, 0)``
    makes ``b < 0`` and is rejected.
    """
    if not params.sigma2 > 0:
        raise InvalidArgumentError("the Gabor integral diverges for sigma2 < 0 (b < 0)")
    b = params.b
    d = y + params.mu / params.sigma2 + 1j * params.omega
    expo = -0.5 * y * y - 0.5 * params.mu**2 / params.sigma2 + d * d / (2 * b)
    arg = (d - b * a * y) / math.sqrt(2 * b)
    # 2 phi(y) sqrt(pi / (2b)) = exp(-y^2/2) / sqrt(b), folded into expo
    return complex(np.exp(expo) * erf_complex(arg) / math.sqrt(b))


def gabor_matched_form(mu: float, omega: float, a: float, y: float) -> complex:
    """Matched case ``sigma2 = a/(1-a)``: ``c * exp(-(1-a)(y - mu)^2/2) exp(j a omega y)``."""
    s2 = a / (1 - a)
    b = 1.0 / a
    c = math.sqrt(a) * math.exp(-a * omega * omega / 2) * erf_complex((mu / s2 + 1j * omega) / math.sqrt(2 * b))
    c *= np.exp(1j * omega * mu / (s2 * b))
    return complex(c * np.exp(-0.5 * (1 - a) * (y - mu) ** 2 + 1j * a * omega * y))


def gabor_null_member(a: float, n: int = 1) -> GaborParams:
    """Matched-variance Gabor wavelet whose image under ``T_a`` vanishes identically.

    Chosen so that ``((1-a)/sqrt(a) mu + j sqrt(a) omega)/sqrt(2)`` is the
    n-th zero of erf in the first quadrant.
    """
    a = _check_a(a, allow_zero=False)
    z = erf_zero(n)
    mu = math.sqrt(2) * z.real * math.sqrt(a) / (1 - a)
    omega = math.sqrt(2) * z.imag / math.sqrt(a)
    return GaborParams(mu, a / (1 - a), omega)


# ---------------------------------------------------------------------------
# f_p


def _check_p_positive(p: float) -> float:
    p = float(p)
    if not (p > 0 and math.isfinite(p)):
        raise InvalidArgumentError("p must be positive")
    return p


def _fp_scalar(w: float, p: float) -> float:
    if w == 0.0:
        return 0.0
    if w < 0:
        return -_fp_scalar(-w, p)
    top = max(8.0, math.sqrt(max(p - 1.0, 0.0) / 2.0) + 7.0)
    width = min(0.5, math.pi / w)
    # first panel: x^p * (sin(w x)/x) e^{-x^2} with Gauss-Jacobi weight x^p
    xs, ws = left_singular_rule(width, p, order=24)
    head = np.sum(ws * np.sinc(w * xs / math.pi) * w * np.exp(-xs * xs))
    x, wt = panel_rule(breakpoints(width, top, width))
    tail = np.sum(wt * x ** (p - 1.0) * np.exp(-x * x) * np.sin(w * x))
    return float(head + tail)


def fp(w, p: float):
    """``f_p(w) = int_0^inf x^(p-1) exp(-x^2) sin(w x) dx``; scalar or array ``w``."""
    p = _check_p_positive(p)
    warr = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(warr)):
        raise InvalidArgumentError("w must be finite")
    out = np.array([_fp_scalar(float(t), p) for t in warr.ravel()]).reshape(warr.shape)
    return float(out) if out.ndim == 0 else out


def fp_expected_root_count(p: float) -> int:
    """Number of positive roots of ``f_p``: ``ceil(p/2) - 1``."""
    return max(math.ceil(_check_p_positive(p) / 2.0) - 1, 0)


def fp_roots(p: float, w_max: float = 20.0, step: float = FP_SCAN_STEP) -> RootSet:
    """Positive roots of ``f_p`` on ``(0, w_max]``, checked against the expected count."""
    p = _check_p_positive(p)
    scale = 0.5 * gamma_fn(p / 2.0)  # = int_0^inf x^(p-1) e^{-x^2} dx
    found = scan_roots(lambda w: fp(w, p), 0.0, w_max, step, noise_floor=1e-12 * scale)
    k = fp_expected_root_count(p)
    if len(found) != k:
        raise NumericalError(f"found {len(found)} positive roots of f_p for p={p}, expected {k}")
    return found


def counterexample_frequency(p: float, index: int = 0) -> float:
    """Frequency for the cosine-modulated prior with a linear L^p estimator.

    The linearity condition reduces to ``int_0^inf t^(p-1) phi(t) sin(omega t) dt = 0``,
    i.e. ``f_p(sqrt(2) omega) = 0``.
    """
    roots = fp_roots(p).roots
    if not 0 <= index < len(roots):
        raise InvalidArgumentError(f"f_p has {len(roots)} positive roots for p={p}")
    return float(roots[index] / math.sqrt(2.0))


def fp_closed_form_p2(w):
    """``f_2(w) = (sqrt(pi)/4) w exp(-w^2/4)``."""
    w = np.asarray(w, dtype=float)
    return math.sqrt(math.pi) / 4.0 * w * np.exp(-0.25 * w * w)


def fp_ode_residual(p: float, w_grid: Sequence[float], step: float = 1e-3, f: Optional[Callable] = None) -> float:
    """Max of ``|2 f'' + (p - 1) f + (w f)'|`` over ``w_grid``.

    Derivatives are central differences at ``step`` and ``step/2`` combined by
    Richardson extrapolation, which removes the ``O(step^2)`` truncation term.
    """
    p = _check_p_positive(p)
    w = np.asarray(w_grid, dtype=float)
    if f is None:

        def f(t):
            return fp(t, p)

    f0 = np.asarray(f(w))

    def central(h):
        fm, fp_ = np.asarray(f(w - h)), np.asarray(f(w + h))
        return (fp_ - fm) / (2 * h), (fp_ - 2 * f0 + fm) / h**2

    c1, c2 = central(step)
    h1, h2 = central(step / 2)
    d1 = (4 * h1 - c1) / 3
    d2 = (4 * h2 - c2) / 3
    res = 2 * d2 + (p - 1) * f0 + f0 + w * d1
    return float(np.max(np.abs(res)))


def fp_principal_value(w, p: float):
    """``p.v. int sign(t)|t|^(-p) exp(-(w - t)^2/4) dt`` for ``p`` in ``(0, 2)``.

    Folding the symmetric cutoff gives ``int_0^inf t^(-p) (e^{-(w-t)^2/4} - e^{-(w+t)^2/4}) dt``,
    whose integrand behaves like ``t^(1-p)`` at the origin.
    """
    p = float(p)
    if not 0 < p < 2:
        raise InvalidArgumentError("the principal-value form needs p in (0, 2)")
    out = []
    for wv in np.atleast_1d(np.asarray(w, dtype=float)):
        top = abs(wv) + 40.0
        h = 0.5
        xs, ws = left_singular_rule(h, 1.0 - p, order=24)
        # (e^{-(w-t)^2/4} - e^{-(w+t)^2/4}) / t = 2 e^{-(w^2+t^2)/4} sinh(w t/2) / t
        g = 2 * np.exp(-(wv * wv + xs * xs) / 4) * np.sinh(wv * xs / 2) / xs
        head = np.sum(ws * g)
        x, wt = panel_rule(breakpoints(h, top, 0.5))
        tail = np.sum(wt * x**-p * (np.exp(-((wv - x) ** 2) / 4) - np.exp(-((wv + x) ** 2) / 4)))
        out.append(head + tail)
    out = np.array(out)
    return float(out[0]) if np.ndim(w) == 0 else out


def pv_shape_check(p: float, w_grid: Sequence[float], w_ref: float = 1.0) -> float:
    """Max relative deviation of ``f_p / pv`` from its value at ``w_ref``."""
    w = np.asarray(w_grid, dtype=float)
    c = fp(w_ref, p) / fp_principal_value(w_ref, p)
    ratio = fp(w, p) / fp_principal_value(w, p)
    return float(np.max(np.abs(ratio / c - 1.0)))


# ---------------------------------------------------------------------------
# Dawson as a Fourier transform


def dawson_fourier_table(w_grid: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature of ``Im int sign(x) phi(x) e^{j w x} dx`` and ``(2/sqrt(pi)) D(w/sqrt(2))``.

    Uses the unnormalized transform ``int g(x) e^{j w x} dx``; the imaginary part
    is ``2 int_0^inf phi(x) sin(w x) dx``.
    """
    w = np.asarray(w_grid, dtype=float)
    quad = np.empty_like(w)
    for i, wv in enumerate(w):
        width = min(0.5, math.pi / abs(wv)) if wv != 0 else 0.5
        quad[i] = 2.0 * integrate(lambda x: _phi(x) * np.sin(wv * x), 0.0, 12.0, width=width)
    closed = 2.0 / math.sqrt(math.pi) * np.asarray(dawson(w / math.sqrt(2.0)))
    return quad, closed


def dawson_fourier_check(w_grid: Sequence[float]) -> float:
    quad, closed = dawson_fourier_table(w_grid)
    return float(np.max(np.abs(quad - closed)))

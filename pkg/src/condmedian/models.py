"""Priors, noise channels and constructors for the special prior families.

Priors are immutable values.  Parametric priors (``Gaussian``, ``Gamma``) and
atomic priors (``PointMass``, ``TwoPoint``) are kept symbolic; everything
else is a ``GridDensity``.  A ``GridDensity`` may carry the analytic density
it was tabulated from, which quadrature routines prefer over the
piecewise-linear interpolant of the table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import InvalidArgumentError, ModelError

DEFAULT_NODES = 4001
ENVELOPE_SDS = 8.0
NORMALIZATION_TOL = 1e-9


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    variance: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)) or self.variance < 0:
            raise InvalidArgumentError(f"invalid Gaussian parameters {self}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * (x - self.mean) ** 2 / self.variance - 0.5 * math.log(2 * math.pi * self.variance)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def window(self, sds: float = ENVELOPE_SDS) -> tuple[float, float]:
        return self.mean - sds * self.sd, self.mean + sds * self.sd

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.sd, size=n)


@dataclass(frozen=True)
class Gamma:
    """Gamma law with shape ``alpha`` and rate ``beta``."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0 and math.isfinite(self.shape) and math.isfinite(self.rate)):
            raise InvalidArgumentError(f"invalid Gamma parameters {self}")

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                self.shape * math.log(self.rate)
                - float(gammaln(self.shape))
                + xlogy(self.shape - 1.0, x)
                - self.rate * x
            )
        return np.where(x < 0, -np.inf, out)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def window(self, sds: float = 10.0) -> tuple[float, float]:
        mean = self.shape / self.rate
        sd = math.sqrt(self.shape) / self.rate
        return max(0.0, mean - sds * sd), mean + sds * sd + 30.0 / self.rate

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, size=n)


@dataclass(frozen=True)
class PointMass:
    location: float = 0.0

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.location], dtype=float), np.array([1.0])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.full(n, float(self.location))


@dataclass(frozen=True)
class TwoPoint:
    """Mass ``weight`` at ``x1`` and ``1 - weight`` at ``x2``."""

    x1: float
    x2: float
    weight: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.weight < 1.0:
            raise InvalidArgumentError("TwoPoint weight must lie in (0, 1)")
        if self.x1 == self.x2:
            raise InvalidArgumentError("TwoPoint atoms must be distinct; use PointMass")

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.x1, self.x2], dtype=float), np.array([self.weight, 1.0 - self.weight])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        return np.where(u < self.weight, float(self.x1), float(self.x2))


def trapezoid(y, x) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def cumulative_trapezoid(y, x) -> np.ndarray:
    out = np.empty_like(np.asarray(y, dtype=float))
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x), out=out[1:])
    return out


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density tabulated on a strictly increasing grid, normalized by the trapezoid rule.

    ``analytic`` (optional) is the normalized density the table was built
    from; it must agree with ``density`` at the nodes.
    """

    x: np.ndarray
    density: np.ndarray
    analytic: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if x.ndim != 1 or x.shape != d.shape or len(x) < 2:
            raise InvalidArgumentError("grid and density must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(x) <= 0) or not np.all(np.isfinite(x)):
            raise InvalidArgumentError("grid abscissae must be finite and strictly increasing")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InvalidArgumentError("density values must be finite and nonnegative")
        mass = trapezoid(d, x)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise InvalidArgumentError(f"grid density integrates to {mass!r}, not 1")
        x.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "density", d)

    @classmethod
    def from_values(cls, x, values, raw: Optional[Callable] = None) -> "GridDensity":
        """Normalize nonnegative ``values`` on ``x``; negative round-off is clamped to 0."""
        x = np.asarray(x, dtype=float)
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        z = trapezoid(v, x)
        if not (z > 0 and math.isfinite(z)):
            raise ModelError("density has zero or non-finite mass on its grid")
        analytic = None
        if raw is not None:
            lo, hi = x[0], x[-1]

            def analytic(t, _raw=raw, _z=z, _lo=lo, _hi=hi):
                t = np.asarray(t, dtype=float)
                inside = (t >= _lo) & (t <= _hi)
                return np.where(inside, np.clip(_raw(np.where(inside, t, _lo)), 0.0, None) / _z, 0.0)

        return cls(x, v / z, analytic)

    @property
    def cdf(self) -> np.ndarray:
        c = cumulative_trapezoid(self.density, self.x)
        return c / c[-1]

    def pdf(self, t):
        if self.analytic is not None:
            return self.analytic(t)
        return np.interp(t, self.x, self.density, left=0.0, right=0.0)

    def logpdf(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(t))

    def window(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def shifted(self, c: float) -> "GridDensity":
        analytic = None
        if self.analytic is not None:
            base = self.analytic

            def analytic(t, _base=base, _c=c):
                return _base(np.asarray(t, dtype=float) - _c)

        return GridDensity(self.x + c, self.density.copy(), analytic)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Exact draws from the piecewise-linear interpolant of the table."""
        x, f = self.x, self.density
        h = np.diff(x)
        mass = 0.5 * (f[1:] + f[:-1]) * h
        cum = np.concatenate(([0.0], np.cumsum(mass)))
        u = rng.random(n) * cum[-1]
        i = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(h) - 1)
        r = u - cum[i]
        f0, slope = f[i], (f[i + 1] - f[i]) / h[i]
        # solve f0 t + slope t^2 / 2 = r on [0, h]
        disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(slope) * h[i] > 1e-12 * np.maximum(f0, 1e-300), 2.0 * r / (f0 + disc), r / f0)
        t = np.where(np.isfinite(t), t, 0.0)
        return x[i] + np.clip(t, 0.0, h[i])


Prior = Union[Gaussian, Gamma, PointMass, TwoPoint, GridDensity]


def canonical(prior: Prior) -> Prior:
    """Identify zero-variance Gaussians with point masses."""
    if isinstance(prior, Gaussian) and prior.variance == 0.0:
        return PointMass(prior.mean)
    return prior


def is_atomic(prior: Prior) -> bool:
    return isinstance(canonical(prior), (PointMass, TwoPoint))


def to_grid(prior: Prior, n: int = DEFAULT_NODES) -> GridDensity:
    """Tabulate a parametric prior on its default window."""
    prior = canonical(prior)
    if isinstance(prior, GridDensity):
        return prior
    if isinstance(prior, Gaussian):
        lo, hi = prior.window()
    elif isinstance(prior, Gamma):
        if prior.shape < 1.0:
            raise ModelError("Gamma priors with shape < 1 have an unbounded density at 0 and cannot be gridded")
        lo, hi = prior.window()
        lo = 0.0
    else:
        raise ModelError(f"atomic prior {prior} has no density")
    x = np.linspace(lo, hi, n)
    return GridDensity.from_values(x, prior.pdf(x), raw=prior.pdf)


# ---------------------------------------------------------------------------
# noise channels


@dataclass(frozen=True)
class GaussianAdditive:
    """``Y = X + Z`` with standard normal ``Z``."""


@dataclass(frozen=True)
class Poisson:
    """``P(Y = y | X = x) = x^y e^{-x} / y!`` for ``x >= 0``."""


def _unit_base_measure(y):
    return np.ones_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class NaturalExpFamily:
    """Conditional density ``h(y) exp(x y - psi(x))``.

    ``gap_bound`` declares a finite upper bound for ``sup_x x^2/2 - psi(x)``;
    ``smoothness`` records how many continuous derivatives ``psi`` has.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray] = _unit_base_measure
    gap_bound: Optional[float] = None
    smoothness: int = 2


NoiseModel = Union[GaussianAdditive, Poisson, NaturalExpFamily]


# ---------------------------------------------------------------------------
# constructors


def _check_slope(a: float, allow_zero: bool = True) -> float:
    a = float(a)
    ok = (0.0 <= a < 1.0) if allow_zero else (0.0 < a < 1.0)
    if not (math.isfinite(a) and ok):
        interval = "[0, 1)" if allow_zero else "(0, 1)"
        raise InvalidArgumentError(f"slope a must lie in {interval}, got {a!r}")
    return a


def matched_gaussian_prior(a: float) -> Prior:
    """``N(0, a/(1-a))``, the prior whose conditional median is ``a*y``; ``a = 0`` is a point mass."""
    a = _check_slope(a)
    if a == 0.0:
        return PointMass(0.0)
    return Gaussian(0.0, a / (1.0 - a))


@dataclass(frozen=True)
class CounterexampleParams:
    a: float
    rho: float
    theta: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        _check_slope(self.a, allow_zero=False)
        if not (abs(self.rho) <= 1.0):
            raise InvalidArgumentError("rho must satisfy |rho| <= 1")
        if not (math.isfinite(self.theta) and math.isfinite(self.omega)):
            raise InvalidArgumentError("theta and omega must be finite")


def modulated_gaussian_prior(
    variance: float, rho: float, frequency: float, theta: float = 0.0, n: int = DEFAULT_NODES
) -> GridDensity:
    """Density proportional to ``exp(-x^2/(2 variance)) (1 + rho cos(frequency x + theta))``."""
    if not variance > 0:
        raise InvalidArgumentError("variance must be positive")
    if not abs(rho) <= 1.0:
        raise InvalidArgumentError("rho must satisfy |rho| <= 1")
    sd = math.sqrt(variance)

    def raw(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * t * t / variance) * (1.0 + rho * np.cos(frequency * t + theta))

    x = np.linspace(-ENVELOPE_SDS * sd, ENVELOPE_SDS * sd, n)
    return GridDensity.from_values(x, raw(x), raw=raw)


def counterexample_prior(params: CounterexampleParams, n: int = DEFAULT_NODES) -> GridDensity:
    """Density proportional to ``exp(-(1-a)/a x^2/2) (1 + rho cos(omega x / sqrt(a) + theta))``.

    Linearity of the optimal L^p estimator is only guaranteed when ``omega``
    comes from :func:`condmedian.linearity.counterexample_frequency`.
    """
    a = params.a
    return modulated_gaussian_prior(a / (1.0 - a), params.rho, params.omega / math.sqrt(a), params.theta, n)


def counterexample_variance(params: CounterexampleParams) -> float:
    """Closed-form variance of the counterexample density (valid for ``theta = 0``)."""
    a, rho, om = params.a, params.rho, params.omega
    e = rho * math.exp(-om * om / (2.0 * (1.0 - a)))
    return a / (1.0 - a) * (1.0 + (1.0 - om * om / (1.0 - a)) * e) / (1.0 + e)


def nef_matched_prior(
    noise: NaturalExpFamily,
    a: float,
    n: int = DEFAULT_NODES,
    half_width: Optional[float] = None,
    tail_tol: float = 1e-6,
) -> GridDensity:
    """Normalized density proportional to ``exp(-x^2/(2a) + psi(x))``.

    Raises ``ModelError`` when the gap bound is not declared or the density
    is not integrable (mass outside the grid above ``tail_tol``).
    """
    a = _check_slope(a, allow_zero=False)
    if noise.gap_bound is None or not math.isfinite(noise.gap_bound):
        raise ModelError("the exponential family must declare a finite bound on sup x^2/2 - psi(x)")
    if half_width is None:
        half_width = ENVELOPE_SDS * math.sqrt(a / (1.0 - a))

    def logf(t):
        t = np.asarray(t, dtype=float)
        return -0.5 * t * t / a + noise.psi(t)

    # tail-mass probe on a grid four times wider
    wide = np.linspace(-4 * half_width, 4 * half_width, 8 * n)
    lw = logf(wide)
    if not np.all(np.isfinite(lw)) and not np.all(np.isfinite(lw[np.abs(wide) <= half_width])):
        raise ModelError("log-density is not finite on the grid")
    shift = np.max(lw[np.isfinite(lw)])
    fw = np.exp(np.where(np.isfinite(lw), lw - shift, -np.inf))
    total = trapezoid(fw, wide)
    inside = np.abs(wide) <= half_width
    outside_mass = total - trapezoid(fw[inside], wide[inside])
    if not math.isfinite(total) or outside_mass > tail_tol * total or fw[0] > tail_tol or fw[-1] > tail_tol:
        raise ModelError("exp(-x^2/(2a) + psi(x)) is not integrable (tail mass beyond the grid)")

    x = np.linspace(-half_width, half_width, n)
    lx = logf(x)
    c = np.max(lx)

    def raw(t, _c=c):
        return np.exp(logf(t) - _c)

    return GridDensity.from_values(x, raw(x), raw=raw)


def gamma_grid_prior(shape: float, rate: float, n: int = DEFAULT_NODES) -> GridDensity:
    """Gamma density tabulated on ``[0, upper]`` as a ``GridDensity``."""
    return to_grid(Gamma(shape, rate), n)


def prior_moments(prior: Prior) -> tuple[float, float]:
    """``(mean, variance)``: closed forms for parametric/atomic priors, trapezoid for grids."""
    prior = canonical(prior)
    if isinstance(prior, Gaussian):
        return prior.mean, prior.variance
    if isinstance(prior, Gamma):
        return prior.shape / prior.rate, prior.shape / prior.rate**2
    if isinstance(prior, (PointMass, TwoPoint)):
        x, w = prior.atoms()
        m = float(np.dot(w, x))
        return m, float(np.dot(w, (x - m) ** 2))
    if isinstance(prior, GridDensity):
        m = trapezoid(prior.x * prior.density, prior.x)
        return m, trapezoid((prior.x - m) ** 2 * prior.density, prior.x)
    raise ModelError(f"unsupported prior {prior!r}")


def total_variation(p: GridDensity, q: GridDensity) -> float:
    """Discrete total variation ``0.5 * int |p - q|`` on ``p``'s grid."""
    return 0.5 * trapezoid(np.abs(p.density - q.pdf(p.x)), p.x)

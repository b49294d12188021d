"""Bayes risk ``E|X - aY|^p`` of linear estimators under Gaussian noise."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ModelError, NumericalError
from .models import Gamma, Gaussian, GridDensity, PointMass, Prior, TwoPoint, canonical
from .quadrature import _jacobi_left, _legendre, breakpoints, panel_rule

NOISE_REACH = 12.0
INNER_PANELS = 24
INNER_ORDER = 16
MC_SAMPLES = 10**6
MC_CHUNK = 1 << 16
DERIVATIVE_STEP = 1e-4


@dataclass(frozen=True)
class RiskCurve:
    a: np.ndarray
    risk: np.ndarray
    p: float
    method: str
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.method not in ("quadrature", "monte-carlo"):
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if np.any(self.risk < 0) or not np.all(np.isfinite(self.risk)):
            raise NumericalError("risk values must be finite and nonnegative")
        if self.stderr is not None and not np.all(np.isfinite(self.stderr)):
            raise NumericalError("non-finite Monte Carlo standard error")

    @property
    def argmin(self) -> float:
        return float(self.a[int(np.argmin(self.risk))])


def _check_p(p: float) -> float:
    p = float(p)
    if not (p >= 1 and math.isfinite(p)):
        raise InvalidArgumentError("loss exponent p must be >= 1")
    return p


def _outer_rule(prior: Prior) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and probability weights discretizing the prior."""
    prior = canonical(prior)
    if isinstance(prior, (PointMass, TwoPoint)):
        return prior.atoms()
    if isinstance(prior, Gaussian):
        lo, hi = prior.window(12.0)
        x, w = panel_rule(breakpoints(lo, hi, prior.sd / 2))
    elif isinstance(prior, Gamma):
        if prior.shape < 1:
            raise ModelError("Gamma priors with shape < 1 are not supported by the risk quadrature")
        lo, hi = prior.window(14.0)
        x, w = panel_rule(breakpoints(0.0, hi, 0.25))
    elif isinstance(prior, GridDensity):
        if prior.analytic is None:
            x, w = panel_rule(prior.x, order=4)
        else:
            lo, hi = prior.window()
            x, w = panel_rule(breakpoints(lo, hi, 0.25))
    else:
        raise ModelError(f"unsupported prior {prior!r}")
    return x, w * prior.pdf(x)


def _noise_moment(c: np.ndarray, a: float, p: float) -> np.ndarray:
    """``E|c - a Z|^p`` for each entry of ``c``, split at the kink ``z = c/a``."""
    c = np.asarray(c, dtype=float)
    if a == 0.0:
        return np.abs(c) ** p
    t, wt = _legendre(INNER_ORDER)
    out = np.empty_like(c)
    # kink outside the window: c - a z keeps one sign there, integrate |c - a z|^p directly
    outside = np.abs(c) > NOISE_REACH * abs(a)
    if outside.any():
        h = 2.0 * NOISE_REACH / (2 * INNER_PANELS)
        z = (-NOISE_REACH + (np.arange(2 * INNER_PANELS)[:, None] + 0.5 * (1.0 + t[None, :])) * h).ravel()
        wz = np.tile(0.5 * h * wt, 2 * INNER_PANELS) * np.exp(-0.5 * z * z)
        out[outside] = np.abs(c[outside, None] - a * z[None, :]) ** p @ wz / math.sqrt(2 * math.pi)
    inside = ~outside
    if inside.any():
        out[inside] = _noise_moment_kinked(c[inside], a, p, t, wt)
    return out


def _noise_moment_kinked(c: np.ndarray, a: float, p: float, t: np.ndarray, wt: np.ndarray) -> np.ndarray:
    tj, wj = _jacobi_left(INNER_ORDER, p)
    k = np.arange(1, INNER_PANELS)
    kink = c / a
    total = np.zeros_like(c)
    for side in (1.0, -1.0):
        # u >= 0 is the distance from the kink, z = kink + side * u
        length = np.maximum(NOISE_REACH - side * kink, 0.0)[:, None]
        h = length / INNER_PANELS
        # panels away from the kink: Gauss-Legendre on a smooth integrand
        u = (k[None, :, None] + 0.5 * (1.0 + t[None, None, :])) * h[:, :, None]
        z = kink[:, None, None] + side * u
        total += np.sum(0.5 * h[:, :, None] * wt * u**p * np.exp(-0.5 * z * z), axis=(1, 2))
        # panel touching the kink: Gauss-Jacobi absorbs u^p
        u0 = 0.5 * h * (1.0 + tj[None, :])
        z0 = kink[:, None] + side * u0
        total += np.sum(wj * (0.5 * h) ** (p + 1) * np.exp(-0.5 * z0 * z0), axis=1)
    return abs(a) ** p * total / math.sqrt(2 * math.pi)


def _risk_quadrature(prior: Prior, a: float, p: float) -> float:
    x, w = _outer_rule(prior)
    val = float(np.sum(w * _noise_moment((1.0 - a) * x, a, p)))
    if not math.isfinite(val):
        raise NumericalError("non-finite risk accumulation")
    return val


def _chunk_generators(seed: int, n_samples: int) -> list[tuple[np.random.Generator, int]]:
    """Fixed-size chunks, each with its own Philox stream spawned from ``seed``."""
    n_chunks = -(-n_samples // MC_CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [MC_CHUNK] * (n_chunks - 1) + [n_samples - MC_CHUNK * (n_chunks - 1)]
    return [(np.random.Generator(np.random.Philox(s)), m) for s, m in zip(seqs, sizes)]


def _mc_sums(prior: Prior, a_grid: np.ndarray, p: float, seed: int, n_samples: int, jobs: int = 1):
    """Per-a sums of the loss and its square; common random numbers across a."""
    prior = canonical(prior)

    def work(item):
        rng, m = item
        x = prior.sample(m, rng)
        z = rng.standard_normal(m)
        s1 = np.empty(len(a_grid))
        s2 = np.empty(len(a_grid))
        for i, a in enumerate(a_grid):
            loss = np.abs((1.0 - a) * x - a * z) ** p
            s1[i] = loss.sum()
            s2[i] = np.dot(loss, loss)
        return s1, s2

    items = _chunk_generators(seed, n_samples)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(work, items))
    else:
        parts = [work(it) for it in items]
    # chunk results are summed in chunk order, so the thread count cannot change the result
    s1 = np.sum([q[0] for q in parts], axis=0)
    s2 = np.sum([q[1] for q in parts], axis=0)
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return mean, np.sqrt(var / n_samples)


def bayes_risk(
    prior: Prior,
    a: float,
    p: float,
    method: str = "quadrature",
    n_samples: int = MC_SAMPLES,
    seed: Optional[int] = None,
) -> tuple[float, Optional[float]]:
    """``(E|X - a(X + Z)|^p, stderr)``; ``stderr`` is ``None`` for quadrature."""
    p = _check_p(p)
    a = float(a)
    if not math.isfinite(a):
        raise InvalidArgumentError("slope must be finite")
    if method == "quadrature":
        return _risk_quadrature(prior, a, p), None
    if method == "monte-carlo":
        if seed is None:
            raise InvalidArgumentError("Monte Carlo risk needs an explicit seed")
        if n_samples < 2:
            raise InvalidArgumentError("need at least two samples")
        m, se = _mc_sums(prior, np.array([a]), p, int(seed), int(n_samples))
        return float(m[0]), float(se[0])
    raise InvalidArgumentError(f"unknown method {method!r}")


def risk_scan(
    prior: Prior,
    p: float,
    a_grid: Sequence[float],
    method: str = "quadrature",
    n_samples: int = MC_SAMPLES,
    seed: Optional[int] = None,
    jobs: int = 1,
) -> RiskCurve:
    p = _check_p(p)
    a_grid = np.asarray(a_grid, dtype=float)
    if np.any(np.diff(a_grid) <= 0):
        raise InvalidArgumentError("a_grid must be strictly increasing")
    if method == "quadrature":
        vals = np.array([_risk_quadrature(prior, a, p) for a in a_grid])
        return RiskCurve(a_grid, vals, p, method)
    if method == "monte-carlo":
        if seed is None:
            raise InvalidArgumentError("Monte Carlo risk needs an explicit seed")
        m, se = _mc_sums(prior, a_grid, p, int(seed), int(n_samples), jobs)
        return RiskCurve(a_grid, m, p, method, int(n_samples), int(seed), se)
    raise InvalidArgumentError(f"unknown method {method!r}")


def admissibility_check(curve: RiskCurve, tol: Optional[float] = None) -> dict:
    """Minimizer location and monotonicity outside ``[0, 1)``.

    ``tol`` bounds allowed violations; the default is 1e-12 for quadrature and
    three standard errors for Monte Carlo.
    """
    if tol is None:
        tol = 1e-12 if curve.stderr is None else 3.0 * float(np.max(curve.stderr))
    a, r = curve.a, curve.risk
    upper = a >= 1.0
    lower = a <= 0.0
    amin = curve.argmin
    return {
        "argmin": amin,
        "argmin_in_unit_interval": bool(0.0 <= amin < 1.0),
        "nondecreasing_above_one": bool(np.all(np.diff(r[upper]) >= -tol)),
        "nonincreasing_below_zero": bool(np.all(np.diff(r[lower]) <= tol)),
    }


def risk_derivative(prior: Prior, a: float, p: float, step: float = DERIVATIVE_STEP, side: str = "left") -> float:
    """One-sided difference quotient of the quadrature risk at ``a``."""
    if side == "left":
        return (_risk_quadrature(prior, a, p) - _risk_quadrature(prior, a - step, p)) / step
    if side == "right":
        return (_risk_quadrature(prior, a + step, p) - _risk_quadrature(prior, a, p)) / step
    raise InvalidArgumentError("side must be 'left' or 'right'")


def gaussian_abs_moment(variance: float, p: float) -> float:
    """``E|N(0, variance)|^p``."""
    return variance ** (p / 2) * 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)


def z_scores(quad: RiskCurve, mc: RiskCurve) -> np.ndarray:
    """``|quadrature - MC| / stderr``; a zero stderr (constant loss) demands agreement to 1e-12."""
    diff = np.abs(quad.risk - mc.risk)
    se = mc.stderr
    exact = diff <= 1e-12 * np.maximum(1.0, np.abs(quad.risk))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(exact, 0.0, np.inf))
    return z

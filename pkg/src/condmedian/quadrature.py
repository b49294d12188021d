"""Composite Gauss rules on user-specified panels.

All kernels in this package are piecewise smooth with known break points
(sign discontinuities, kinks of ``|t|^p``, oscillation periods), so a
composite Gauss-Legendre rule with those points as panel boundaries is
spectrally accurate on each panel.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy.special import roots_jacobi

DEFAULT_ORDER = 20


@lru_cache(maxsize=None)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


@lru_cache(maxsize=None)
def _jacobi_left(order: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_jacobi(order, 0.0, beta)
    return t, w


def breakpoints(lo: float, hi: float, width: float, extra: Iterable[float] = ()) -> np.ndarray:
    """Panel boundaries of at most ``width`` covering ``[lo, hi]``, including ``extra``."""
    if hi <= lo:
        return np.array([lo, hi])
    n = max(int(np.ceil((hi - lo) / width)), 1)
    pts = np.linspace(lo, hi, n + 1)
    ex = [e for e in extra if lo < e < hi]
    if ex:
        pts = np.union1d(pts, ex)
        # drop slivers created next to the inserted points
        keep = np.concatenate(([True], np.diff(pts) > 1e-13 * max(1.0, hi - lo)))
        pts = pts[keep]
        pts[-1] = hi
    return pts


def panel_rule(breaks: np.ndarray, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Gauss-Legendre rule on ``breaks``."""
    t, w = _legendre(order)
    a = np.asarray(breaks[:-1], dtype=float)[:, None]
    b = np.asarray(breaks[1:], dtype=float)[:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * t[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    width: float = 0.25,
    extra: Iterable[float] = (),
    order: int = DEFAULT_ORDER,
):
    """Integrate a vectorized ``f`` over ``[lo, hi]`` on panels split at ``extra``."""
    x, w = panel_rule(breakpoints(lo, hi, width, extra), order)
    return np.sum(w * f(x))


def left_singular_rule(h: float, beta: float, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``int_0^h x**beta g(x) dx`` with smooth ``g``.

    Returns nodes ``x`` and weights already containing the factor ``x**beta``.
    """
    t, w = _jacobi_left(order, float(beta))
    x = 0.5 * h * (1.0 + t)
    return x, w * (0.5 * h) ** (beta + 1.0)

"""Located roots of scalar functions together with bracketing certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalError


@dataclass(frozen=True)
class RootSet:
    """Sorted roots, a sign-change bracket for each, and ``|f(root)|``."""

    roots: np.ndarray
    brackets: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        roots = np.asarray(self.roots, dtype=float).reshape(-1)
        brackets = np.asarray(self.brackets, dtype=float).reshape(-1, 2)
        residuals = np.asarray(self.residuals, dtype=float).reshape(-1)
        if not (len(roots) == len(brackets) == len(residuals)):
            raise ValueError("roots, brackets and residuals must have equal length")
        if np.any(np.diff(roots) <= 0):
            raise ValueError("roots must be strictly increasing")
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "brackets", brackets)
        object.__setattr__(self, "residuals", residuals)

    def __len__(self) -> int:
        return len(self.roots)

    def certified(self, f: Callable[[float], float]) -> bool:
        """True when every bracket shows a strict sign change of ``f``."""
        for lo, hi in self.brackets:
            if not np.sign(f(lo)) * np.sign(f(hi)) < 0:
                return False
        return True


def scan_roots(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    step: float,
    noise_floor: float = 0.0,
    xtol: float = 1e-14,
) -> RootSet:
    """Find sign changes of ``f`` on a uniform scan of ``(lo, hi]`` and refine them.

    ``f`` must accept an array.  Sign changes where both scan values are below
    ``noise_floor`` in magnitude are discarded: they cannot be distinguished
    from quadrature noise.
    """
    n = max(int(np.ceil((hi - lo) / step)), 1)
    w = np.linspace(lo, hi, n + 1)[1:]
    v = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(v)):
        raise NumericalError("non-finite function value during root scan")

    def scalar(t: float) -> float:
        return float(np.asarray(f(np.array([t])))[0])

    roots, brackets, residuals = [], [], []
    for i in range(len(w) - 1):
        a, b = v[i], v[i + 1]
        if max(abs(a), abs(b)) <= noise_floor:
            continue
        if a == 0.0:
            # exact hit on a scan node
            if i > 0 and v[i - 1] * b < 0:
                roots.append(w[i])
                brackets.append((w[i - 1], w[i + 1]))
                residuals.append(0.0)
            continue
        if a * b < 0:
            r = brentq(scalar, w[i], w[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
            roots.append(r)
            brackets.append((w[i], w[i + 1]))
            residuals.append(abs(scalar(r)))
    return RootSet(np.array(roots), np.array(brackets).reshape(-1, 2), np.array(residuals))

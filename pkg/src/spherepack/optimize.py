"""One-dimensional search routines used throughout the package."""

from __future__ import annotations

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 500):
    """Maximize a unimodal ``f`` on ``[a, b]`` by golden-section search.

    Returns ``(x, f(x))`` where ``x`` is the best point visited (the endpoints
    included, so boundary maxima are returned exactly).
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = max(candidates)
    return x, fx


def bisect_increasing(g, target: float, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 400) -> float:
    """Solve ``g(x) = target`` for nondecreasing ``g`` with ``g(lo) <= target <= g(hi)``."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

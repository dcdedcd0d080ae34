"""Gallager function, sphere-packing exponent and its saddle point.

For a symmetric channel the uniform input maximizes ``E0(s, P)`` for every
``s``, so ``E_sp(R) = sup_{s >= 0} E0(s, U) - s R``. With
``alpha = 1/(1+s)`` and ``sigma_s = (U W^alpha)^(1/alpha) / Tr[...]`` one has
``E0(s, U) = s D_alpha(W_1 || sigma_s)``, which yields the derivative in
closed form and identifies ``sigma_s`` at the optimal ``s`` as the saddle
point state.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .channel import SymmetricCqChannel, probability_vector
from .divergence import INF, capacity, conditional_renyi, petz_renyi, r_infinity
from .errors import ConvergenceError, DomainError
from .largedev import extremal_constants, lambda0_grid, nussbaum_szkola
from .optimize import golden_max
from .qcore import SUPPORT_CUTOFF, frac_power, trace_distance, trace_product

S_CAP = 1e4
SEARCH_TOL = 1e-12
FIXED_POINT_TOL = 1e-12
SADDLE_RESIDUAL_TOL = 1e-10
EQUALIZATION_TOL = 1e-8


def _log_power_trace(m: np.ndarray, a: float):
    """``(log Tr[m^a], m^a / Tr[m^a])`` for PSD ``m``, stable for large ``a``."""
    w, u = np.linalg.eigh(m)
    w = np.where(w > SUPPORT_CUTOFF, w, 0.0)
    top = w.max()
    scaled = np.where(w > 0, np.exp(a * (np.log(np.where(w > 0, w, 1.0)) - math.log(top))), 0.0)
    total = scaled.sum()
    state = (u * (scaled / total)) @ u.conj().T
    return a * math.log(top) + math.log(total), 0.5 * (state + state.conj().T)


def e0(ch: SymmetricCqChannel, p, s: float) -> float:
    """``E0(s, P) = -log Tr[(sum_x P(x) W_x^(1/(1+s)))^(1+s)]``."""
    if s < 0:
        raise DomainError(f"s={s} must be nonnegative", code="S_RANGE")
    p = probability_vector(p, ch.k)
    if s == 0:
        return 0.0
    alpha = 1.0 / (1.0 + s)
    m = sum(px * frac_power(w, alpha) for px, w in zip(p, ch.outputs) if px > 0)
    return -_log_power_trace(m, 1.0 + s)[0]


@lru_cache(maxsize=8192)
def _uniform_state(ch: SymmetricCqChannel, s: float):
    """``(E0(s, U), sigma_s)`` with ``sigma_s`` the normalized ``(U W^alpha)^(1/alpha)``."""
    alpha = 1.0 / (1.0 + s)
    m = sum(frac_power(w, alpha) for w in ch.outputs) / ch.k
    log_z, sigma = _log_power_trace(m, 1.0 + s)
    return -log_z, sigma


def e0_uniform(ch: SymmetricCqChannel, s: float) -> float:
    return 0.0 if s == 0 else _uniform_state(ch, s)[0]


def e0_uniform_slope(ch: SymmetricCqChannel, s: float) -> float:
    """``d/ds E0(s, U) = -Lambda_0(t) - Lambda_0'(t)/(1+s)`` at ``t = s/(1+s)``.

    ``Lambda_0`` is the cumulant function of the NS pair of ``(W_1, sigma_s)``;
    ``sigma_s`` minimizes the underlying divergence, so it is held fixed.
    """
    if s == 0:
        return capacity(ch)
    _, sigma = _uniform_state(ch, s)
    ns = nussbaum_szkola(ch.outputs[0].matrix, sigma, check=False)
    t = s / (1.0 + s)
    lam, mean, _, _ = lambda0_grid(ns, [t])
    return float(-lam[0] - mean[0] / (1.0 + s))


@dataclass(frozen=True)
class ExponentPoint:
    R: float
    esp: float
    s_star: float

    @property
    def slope(self) -> float:
        return -self.s_star

    @property
    def alpha_star(self) -> float:
        return 1.0 / (1.0 + self.s_star)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.esp)


@lru_cache(maxsize=4096)
def esp_point(ch: SymmetricCqChannel, R: float, tol: float = SEARCH_TOL) -> ExponentPoint:
    """``E_sp(R)`` and its maximizing ``s``.

    Returns ``esp = inf`` when ``R <= R_inf`` and ``esp = 0, s = 0`` when
    ``R >= C``. In between, the concave objective is bracketed by doubling,
    maximized by golden section and the argmax refined on the stationarity
    condition ``E0'(s) = R``.
    """
    R = float(R)
    if R <= r_infinity(ch):
        return ExponentPoint(R, INF, INF)
    if R >= capacity(ch):
        return ExponentPoint(R, 0.0, 0.0)

    def slope_gap(s):
        return e0_uniform_slope(ch, s) - R

    hi = 1.0
    while slope_gap(hi) > 0:
        if hi >= S_CAP:
            raise ConvergenceError(
                f"no maximizer below s_cap={S_CAP:g} at R={R!r}; rate too close to R_inf",
                code="BRACKET_CAP", rate=R, s_cap=S_CAP)
        hi = min(2.0 * hi, S_CAP)
    lo = 0.0 if hi == 1.0 else hi / 2.0
    s, _ = golden_max(lambda x: e0_uniform(ch, x) - x * R, lo, hi, tol=tol)
    # golden section resolves s only to about sqrt(eps); polish on the derivative
    width = 1e-6 * max(1.0, s)
    a, b = max(lo, s - width), min(hi, s + width)
    if slope_gap(a) < 0 or slope_gap(b) > 0:
        a, b = lo, hi
    if slope_gap(a) > 0 > slope_gap(b):
        s = brentq(slope_gap, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    value = e0_uniform(ch, s) - s * R
    return ExponentPoint(R, max(value, 0.0), s)


def esp(ch: SymmetricCqChannel, R: float) -> float:
    return esp_point(ch, R).esp


def _check_interior(ch: SymmetricCqChannel, R: float):
    rinf, cap = r_infinity(ch), capacity(ch)
    if not rinf < R < cap:
        raise DomainError(f"rate {R} outside (R_inf, C) = ({rinf:.12g}, {cap:.12g})",
                          code="RATE_RANGE", r_inf=rinf, capacity=cap)


def renyi_map(ch: SymmetricCqChannel, p, alpha: float, sigma) -> np.ndarray:
    """One step ``sigma -> normalized (sum_x P(x) W_x^a / Tr[W_x^a sigma^(1-a)])^(1/a)``."""
    sig_pow = frac_power(sigma, 1.0 - alpha)
    acc = 0.0
    for px, w in zip(p, ch.outputs):
        if px <= 0:
            continue
        wa = frac_power(w, alpha)
        overlap = trace_product(wa, sig_pow)
        if overlap <= SUPPORT_CUTOFF:
            raise ConvergenceError(
                f"support collapse: Tr[W_x^a sigma^(1-a)] = {overlap:.3e}",
                code="SUPPORT_COLLAPSE", overlap=overlap)
        acc = acc + px * wa / overlap
    return _log_power_trace(acc, 1.0 / alpha)[1]


@dataclass(frozen=True)
class FixedPointResult:
    sigma: np.ndarray
    residual: float
    iterations: int


def saddle_fixed_point(ch: SymmetricCqChannel, p, alpha: float, sigma0,
                       tol: float = FIXED_POINT_TOL, max_iter: int = 10_000) -> FixedPointResult:
    """Iterate the Renyi-center map from ``sigma0`` until the step is below ``tol``.

    Stagnation (no convergence within ``max_iter``) is reported as an error
    rather than returning a boundary point.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)", code="ALPHA_RANGE")
    p = probability_vector(p, ch.k)
    sigma = np.asarray(sigma0, dtype=complex)
    residual = math.inf
    for it in range(1, max_iter + 1):
        nxt = renyi_map(ch, p, alpha, sigma)
        residual = trace_distance(nxt, sigma)
        sigma = nxt
        if residual <= tol:
            return FixedPointResult(sigma, residual, it)
    raise ConvergenceError(f"fixed point not reached in {max_iter} steps (residual {residual:.3e})",
                           code="NO_CONVERGENCE", residual=residual)


@dataclass(frozen=True, eq=False)
class SaddlePoint:
    R: float
    alpha_star: float
    s_star: float
    sigma_star: np.ndarray
    esp: float
    fixed_point_residual: float
    equalization_gap: float


@lru_cache(maxsize=1024)
def sigma_star(ch: SymmetricCqChannel, R: float) -> SaddlePoint:
    """Saddle point ``(alpha*, sigma*)`` at an interior rate, certified.

    ``sigma*`` comes from the closed form at ``alpha* = 1/(1+s*)``; its
    fixed-point residual and the equalization of ``D_alpha*(W_x || sigma*)``
    across inputs are checked.
    """
    _check_interior(ch, R)
    pt = esp_point(ch, R)
    alpha = 1.0 / (1.0 + pt.s_star)
    sigma = _uniform_state(ch, pt.s_star)[1]
    residual = trace_distance(renyi_map(ch, ch.uniform(), alpha, sigma), sigma)
    divs = [petz_renyi(w.matrix, sigma, alpha) for w in ch.outputs]
    gap = max(abs(d - divs[0]) for d in divs)
    if residual > SADDLE_RESIDUAL_TOL or gap > EQUALIZATION_TOL:
        raise ConvergenceError(
            f"saddle point not certified at R={R}: residual {residual:.3e}, equalization gap {gap:.3e}",
            code="SADDLE_CERT", residual=residual, gap=gap)
    return SaddlePoint(R, alpha, pt.s_star, sigma, pt.esp, residual, gap)


def objective_f(ch: SymmetricCqChannel, p, alpha: float, sigma, R: float) -> float:
    """``F_{R,P}(alpha, sigma) = ((alpha - 1)/alpha) (R - D_alpha(W || sigma | P))``."""
    d = conditional_renyi(ch, sigma, p, alpha)
    if math.isinf(d):
        return INF
    return (alpha - 1.0) / alpha * (R - d)


def invariance_check(ch: SymmetricCqChannel, p, R: float) -> float:
    """``F_{R,P}(alpha*, sigma*)`` at the uniform-input saddle point."""
    sp = sigma_star(ch, R)
    return objective_f(ch, p, sp.alpha_star, sp.sigma_star, R)


@dataclass(frozen=True)
class DualResult:
    value: float
    alpha: float
    sigma: np.ndarray


def esp_dual(ch: SymmetricCqChannel, R: float, p=None, tol: float = 1e-10) -> DualResult:
    """``sup_alpha min_sigma F_{R,P}(alpha, sigma)`` via the fixed-point solver.

    The outer search is golden section over ``alpha`` in ``[1e-6, 1 - 1e-6]``;
    the inner solve is warm-started from the previous ``alpha``.
    """
    p = ch.uniform() if p is None else probability_vector(p, ch.k)
    warm = [np.eye(ch.dim, dtype=complex) / ch.dim]
    cache = {}

    def inner(alpha):
        if alpha not in cache:
            fp = saddle_fixed_point(ch, p, alpha, warm[0])
            warm[0] = fp.sigma
            cache[alpha] = (objective_f(ch, p, alpha, fp.sigma, R), fp.sigma)
        return cache[alpha][0]

    alpha, value = golden_max(inner, 1e-6, 1.0 - 1e-6, tol=tol)
    return DualResult(value, alpha, cache[alpha][1])


def in_positive_set(ch: SymmetricCqChannel, p, R: float, threshold: float = 1e-9) -> bool:
    """Numerical membership test: the minimax value of ``F_{R,P}`` exceeds ``threshold``."""
    return esp_dual(ch, R, p).value > threshold


def esp_second_derivative_fd(ch: SymmetricCqChannel, R: float, h: float = 1e-4) -> float:
    return (esp(ch, R + h) - 2.0 * esp(ch, R) + esp(ch, R - h)) / (h * h)


@dataclass(frozen=True)
class CurvatureResult:
    upsilon: float
    s_bar: float
    v_min: float
    fd_second: float


def curvature(ch: SymmetricCqChannel, R_bar: float, h: float = 1e-4) -> CurvatureResult:
    """Curvature bound ``Upsilon = (1 + s)^3 / V_min`` at ``R_bar`` with its check.

    The central finite difference of ``E_sp`` (step ``h``) must not exceed
    ``Upsilon + 1e-4``; the check is skipped when the stencil leaves
    ``(R_inf, C)``.
    """
    _check_interior(ch, R_bar)
    sp = sigma_star(ch, R_bar)
    ns_list = [nussbaum_szkola(w.matrix, sp.sigma_star) for w in ch.outputs]
    consts = extremal_constants(ns_list)
    upsilon = (1.0 + sp.s_star) ** 3 / consts.v_min
    fd = math.nan
    if r_infinity(ch) < R_bar - h and R_bar + h < capacity(ch):
        fd = esp_second_derivative_fd(ch, R_bar, h)
        if fd > upsilon + 1e-4:
            raise ConvergenceError(f"E_sp'' = {fd:.6g} exceeds Upsilon = {upsilon:.6g} at R={R_bar}",
                                   code="CURVATURE", fd=fd, upsilon=upsilon)
    return CurvatureResult(upsilon, sp.s_star, consts.v_min, fd)


def curvature_bound(ch: SymmetricCqChannel, R_bar: float) -> float:
    return curvature(ch, R_bar).upsilon


def esp_curve(ch: SymmetricCqChannel, rates: Sequence[float], jobs: int = 1) -> list[ExponentPoint]:
    """Exponent points in the order of ``rates``; convexity and monotonicity are checked."""
    rates = [float(r) for r in rates]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(lambda r: esp_point(ch, r), rates))
    else:
        points = [esp_point(ch, r) for r in rates]
    curve_violations(points, raise_on_error=True)
    return points


def curve_violations(points: Sequence[ExponentPoint], tol: float = 1e-10, raise_on_error: bool = False):
    """Pairwise monotonicity and three-point convexity violations of a finite curve."""
    pts = sorted((p for p in points if not p.infinite), key=lambda p: p.R)
    bad = []
    for a, b in zip(pts, pts[1:]):
        if b.R > a.R and b.esp > a.esp + tol:
            bad.append(("NOT_NONINCREASING", a.R, b.R))
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        if c.R > a.R:
            lam = (b.R - a.R) / (c.R - a.R)
            if b.esp > (1 - lam) * a.esp + lam * c.esp + tol:
                bad.append(("NOT_CONVEX", a.R, c.R))
    if bad and raise_on_error:
        raise ConvergenceError(f"exponent curve violates shape constraints: {bad[:3]}",
                               code="CURVE_SHAPE", violations=bad)
    return bad

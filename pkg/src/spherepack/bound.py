"""Finite-blocklength sphere-packing lower bound.

With the back-off ``gamma_n = (1/2 + gamma) log(n) / n`` and
``R_n = R - gamma_n`` the bound reads

    alpha_hat >= (A / sqrt(n)) exp(-n E_sp(R_n))            (direct form)
              >= n^(-(1+s*)/2) exp(-n E_sp(R)) * correction  (Taylor form)

for ``n >= N0``, where ``correction = A n^(-gamma s*) exp(-n gamma_n^2 Upsilon / 2)``
is an explicit replacement for the asymptotic ``1 - o(1)``. All bounds are
carried in the log domain as well, since ``exp(-n E)`` underflows quickly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .channel import SymmetricCqChannel, probability_vector
from .divergence import INF, capacity, r_infinity
from .errors import ConvergenceError, DomainError
from .exponent import S_CAP, curvature, esp_point, sigma_star
from .largedev import (
    BrrResult,
    ExtremalConstants,
    brr_lower_bound,
    extremal_constants,
    mixture_grid,
    ns_increment,
    nussbaum_szkola,
)
from .oracle import convolve_letters, ns_letter, tail_tolerance

BAND_POINTS = 9
UPSILON_POINTS = 5


def gamma_n(n: int, gamma: float) -> float:
    return (0.5 + gamma) * math.log(n) / n


def default_xi(ch: SymmetricCqChannel, R: float) -> float:
    rinf = r_infinity(ch)
    return R / 2.0 if rinf == 0.0 else (R - rinf) / 2.0


def _check_rate(ch, R):
    rinf, cap = r_infinity(ch), capacity(ch)
    if not rinf < R < cap:
        raise DomainError(f"rate {R} outside (R_inf, C) = ({rinf:.12g}, {cap:.12g})",
                          code="RATE_RANGE", r_inf=rinf, capacity=cap)


@lru_cache(maxsize=256)
def band_constants(ch: SymmetricCqChannel, r_lo: float, r_hi: float,
                   points: int = BAND_POINTS) -> ExtremalConstants:
    """Extremal constants aggregated over saddle points at rates in ``[r_lo, r_hi]``.

    The thresholds must not depend on ``n``, while the saddle point moves with
    ``R_n``; taking extremes over a rate grid covering every admissible
    ``R_n`` makes one set of constants serve all ``n >= N1``.
    """
    v_min, v_max, t_max = math.inf, 0.0, 0.0
    for r in np.linspace(r_lo, r_hi, points):
        sp = sigma_star(ch, float(r))
        c = extremal_constants([nussbaum_szkola(w.matrix, sp.sigma_star) for w in ch.outputs])
        v_min, v_max, t_max = min(v_min, c.v_min), max(v_max, c.v_max), max(t_max, c.t_max)
    return ExtremalConstants.from_extrema(v_min, v_max, t_max)


def _decimal_exp(x: float) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        return Decimal(x).exp()


@dataclass(frozen=True)
class Thresholds:
    N1: int
    N2: int
    N3: int

    @property
    def N0(self) -> int:
        return max(self.N1, self.N2, self.N3)

    def __iter__(self):
        return iter((self.N1, self.N2, self.N3, self.N0))


def threshold_n1(gamma: float, xi: float) -> int:
    """Least ``N`` with ``gamma_n <= xi`` for every ``n >= N``.

    ``log(n)/n`` decreases for ``n >= 3``, so the search runs over ``n >= 3``
    and then extends downward while the condition still holds.
    """
    hi = 3
    while gamma_n(hi, gamma) > xi:
        hi *= 2
    lo = max(3, hi // 2)
    if gamma_n(lo, gamma) <= xi:
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if gamma_n(mid, gamma) <= xi:
            hi = mid
        else:
            lo = mid
    n = hi
    while n > 1 and gamma_n(n - 1, gamma) <= xi:
        n -= 1
    return n


def thresholds_from_constants(consts: ExtremalConstants, gamma: float, xi: float) -> Thresholds:
    n1 = threshold_n1(gamma, xi)
    x = (1.0 + (1.0 + consts.k_max) ** 2) / math.sqrt(consts.v_min)
    with localcontext() as ctx:
        ctx.prec = 60
        n2 = int((Decimal(x) ** 2).to_integral_value(rounding=ROUND_CEILING))
        # A n^gamma > 1  <=>  n > exp(-log(A) / gamma)
        n3 = int(_decimal_exp(-consts.log_a / gamma).to_integral_value(rounding=ROUND_FLOOR)) + 1
    return Thresholds(n1, max(n2, 1), max(n3, 1))


def n_thresholds(ch: SymmetricCqChannel, R: float, gamma: float = 1.0, xi: float | None = None) -> Thresholds:
    """``(N1, N2, N3)``, with ``N0`` their maximum."""
    _check_rate(ch, R)
    if gamma <= 0:
        raise DomainError("gamma must be positive", code="GAMMA_RANGE")
    xi = default_xi(ch, R) if xi is None else xi
    if not 0.0 < xi < R - r_infinity(ch):
        raise DomainError(f"xi={xi} outside (0, R - R_inf)", code="XI_RANGE")
    return thresholds_from_constants(band_constants(ch, R - xi, R), gamma, xi)


@dataclass(frozen=True)
class BoundReport:
    R: float
    n: int
    gamma: float
    xi: float
    gamma_n: float
    R_n: float
    esp_R: float
    esp_Rn: float
    s_star_R: float
    constants: ExtremalConstants | None
    upsilon: float
    N1: int
    N2: int
    N3: int
    N0: int
    log_direct_bound: float
    log_correction: float
    log_theorem_bound: float
    valid: bool
    infinite: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def direct_bound(self) -> float:
        return math.exp(self.log_direct_bound)

    @property
    def theorem_bound(self) -> float:
        return math.exp(self.log_theorem_bound)

    @property
    def correction(self) -> float:
        return math.exp(self.log_correction)

    @property
    def log_prefactor(self) -> float:
        """``log(theorem_bound * exp(n E_sp(R)))``."""
        return self.log_theorem_bound + self.n * self.esp_R


def upsilon_band(ch: SymmetricCqChannel, r_lo: float, r_hi: float, points: int = UPSILON_POINTS) -> float:
    """Largest curvature bound over a grid of ``[r_lo, r_hi]``."""
    grid = [r_hi] if r_hi - r_lo <= 0 else np.linspace(r_lo, r_hi, points)
    return max(curvature(ch, float(r)).upsilon for r in grid)


def sp_bound(ch: SymmetricCqChannel, R: float, n: int, gamma: float = 1.0, xi: float | None = None) -> BoundReport:
    """All quantities of the finite-n lower bound at ``(R, n, gamma)``."""
    R = float(R)
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1", code="N_RANGE")
    if gamma <= 0:
        raise DomainError("gamma must be positive", code="GAMMA_RANGE")
    cap, rinf = capacity(ch), r_infinity(ch)
    if R >= cap:
        raise DomainError(f"rate {R} at or above capacity {cap:.12g}", code="RATE_RANGE", capacity=cap)
    if R < 0:
        raise DomainError(f"rate {R} is negative", code="RATE_RANGE")
    g_n = gamma_n(n, gamma)
    if R <= rinf:
        # E_sp(R) is infinite and the bound holds trivially; no finite value is claimed
        return BoundReport(R, n, gamma, math.nan, g_n, R - g_n, INF, INF, INF, None, math.nan,
                           1, 1, 1, 1, -math.inf, math.nan, -math.inf, True, True,
                           ("E_sp(R) is infinite; the bound holds trivially",))
    xi = default_xi(ch, R) if xi is None else float(xi)
    thr = n_thresholds(ch, R, gamma, xi)
    consts = band_constants(ch, R - xi, R)
    pt_r = esp_point(ch, R)
    r_n = R - g_n
    pt_n = esp_point(ch, r_n)
    notes = []
    if pt_n.infinite:
        notes.append("R_n <= R_inf: direct bound is zero")
        log_direct = -math.inf
    else:
        log_direct = consts.log_a - 0.5 * math.log(n) - n * pt_n.esp
    upsilon = upsilon_band(ch, max(r_n, R - xi), R)
    s = pt_r.s_star
    log_corr = consts.log_a - gamma * s * math.log(n) - n * g_n**2 * upsilon / 2.0
    log_theorem = -(1.0 + s) / 2.0 * math.log(n) - n * pt_r.esp + log_corr
    valid = n >= thr.N0
    if valid and log_theorem > log_direct + 1e-9:
        raise ConvergenceError(f"Taylor form {log_theorem} exceeds direct form {log_direct} at n={n}",
                               code="TAYLOR_ORDER")
    return BoundReport(R, n, gamma, xi, g_n, r_n, pt_r.esp, pt_n.esp, s, consts, upsilon,
                       thr.N1, thr.N2, thr.N3, thr.N0, log_direct, log_corr, log_theorem, valid,
                       False, tuple(notes))


def nagaoka_exponent(ns_list, weights, rate: float) -> float:
    """``sup_{s >= 0} {-s R - (1+s) Lambda_{0,P}(s/(1+s))}`` for NS pairs built against a fixed state.

    Infinite when ``R <= -sum_x P(x) log q_x(supp p_x)``.
    """
    weights = np.asarray(weights, dtype=float)
    floor = -sum(w * math.log(ns.q.sum()) for w, ns in zip(weights, ns_list) if w > 0)
    if rate <= floor:
        return INF

    def value(s):
        t = s / (1.0 + s)
        lam = mixture_grid(ns_list, weights, [t], 0)[0][0]
        return -s * rate - (1.0 + s) * lam

    def slope(s):
        t = s / (1.0 + s)
        lam, d1, _ = mixture_grid(ns_list, weights, [t], 0)
        return float(-rate - lam[0] - d1[0] / (1.0 + s))

    if slope(0.0) <= 0:
        return max(0.0, float(value(0.0)))
    hi = 1.0
    while slope(hi) > 0:
        if hi >= S_CAP:
            raise ConvergenceError(f"no maximizer below s_cap={S_CAP:g} at R={rate}", code="BRACKET_CAP")
        hi = min(2.0 * hi, S_CAP)
    s = brentq(slope, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return max(0.0, float(value(s)))


@dataclass(frozen=True, eq=False)
class NagaokaResult:
    alpha_u: float
    beta_u: float
    beta_u_closed: float
    phi: float
    log_delta: float
    nagaoka_sum: float
    brr_alpha: BrrResult | None
    brr_beta: BrrResult | None
    log_q_mass: float
    threshold_holds: bool
    sigma: np.ndarray
    ns_list: tuple

    @property
    def delta(self) -> float:
        return math.exp(self.log_delta)

    def __iter__(self):
        return iter((self.alpha_u, self.beta_u, self.threshold_holds))


def _type_counts(x_type, n: int, k: int) -> list[int]:
    p = probability_vector(x_type, k)
    counts = [int(round(px * n)) for px in p]
    if sum(counts) != n or any(abs(c - px * n) > 1e-9 * n for c, px in zip(counts, p)):
        raise DomainError(f"{list(p)} is not a type of length {n}", code="NOT_A_TYPE")
    return counts


def nagaoka_exact_errors(ch: SymmetricCqChannel, x_type, R_n: float, n: int, sigma=None) -> NagaokaResult:
    """Exact errors of the likelihood-ratio test set ``U = {sum log p/q > n (R_n - phi)}``.

    ``alpha(U; p^n) = Pr_p[(1/n) sum log(q/p) >= phi - R_n]`` and
    ``beta(U; q^n) = Pr_q[sum log(p/q) > n (R_n - phi)]`` are computed by exact
    convolution; ``alpha + delta beta`` with ``delta = exp(n (R_n - phi))``
    equals ``sum min(p^n, delta q^n)``. Where the Bahadur-Ranga Rao
    preconditions hold, both errors are compared with the bound.
    """
    n = int(n)
    counts = _type_counts(x_type, n, ch.k)
    if sigma is None:
        sigma = sigma_star(ch, R_n).sigma_star
    sigma = np.asarray(sigma)
    ns_list = tuple(nussbaum_szkola(w.matrix, sigma) for w in ch.outputs)
    weights = np.array(counts, dtype=float) / n
    phi = nagaoka_exponent(ns_list, weights, R_n)
    if math.isinf(phi):
        raise DomainError(f"exponent is infinite at R_n={R_n}; delta vanishes", code="RATE_RANGE")
    letters = [ns_letter(ns) for ns, c in zip(ns_list, counts) for _ in range(c)]
    law = convolve_letters(letters)
    thr = n * (R_n - phi)
    tol = tail_tolerance(thr)
    inside = law.values > thr + tol
    alpha_u = float(law.pmass[~inside].sum())
    beta_u = float(law.qmass[inside].sum())
    beta_closed = float(law.qmass[law.values >= thr - tol].sum())
    log_delta = n * (R_n - phi)
    total = alpha_u + math.exp(log_delta) * beta_u

    holds = True
    brr_a = brr_b = None
    log_c = sum(c * math.log(ns.q.sum()) for ns, c in zip(ns_list, counts) if c > 0)
    if all(ns.dominated for ns, c in zip(ns_list, counts) if c > 0):
        try:
            brr_a = brr_lower_bound([(ns_increment(ns, 0), c) for ns, c in zip(ns_list, counts)], phi - R_n)
        except DomainError:
            brr_a = None
        try:
            brr_b = brr_lower_bound([(ns_increment(ns, 1), c) for ns, c in zip(ns_list, counts)], R_n - phi)
        except DomainError:
            brr_b = None
        if brr_a is not None and brr_a.precondition_ok:
            holds &= alpha_u >= brr_a.bound
        if brr_b is not None and brr_b.precondition_ok:
            holds &= math.log(max(beta_closed, 1e-300)) >= log_c + brr_b.log_bound
    return NagaokaResult(alpha_u, beta_u, beta_closed, phi, log_delta, total, brr_a, brr_b,
                         log_c, bool(holds), sigma, ns_list)

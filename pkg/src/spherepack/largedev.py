"""Classical reduction and strong large deviations.

A pair of states ``(rho, sigma)`` is mapped to its Nussbaum-Szkola pair of
classical distributions ``(p, q)``; the log-likelihood ratio
``Z = log q - log p`` then carries every Petz divergence of the pair. This
module evaluates the cumulant generating functions of ``Z``, their
Fenchel-Legendre transforms, the extremal constants entering the finite-n
bound, and the Bahadur-Ranga Rao lower bound for tails of sums.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError
from .optimize import bisect_increasing, golden_max
from .qcore import SUPPORT_CUTOFF, eigh

BRR_CONST = 15.0 * math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class NsPair:
    """Nussbaum-Szkola distributions on index pairs ``(i, j)``.

    Only atoms with ``p > 0`` are stored; ``q`` is zero-extended outside the
    support of ``p`` (so ``q`` may carry total mass below one).
    """

    support: tuple[tuple[int, int], ...]
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if p.shape != q.shape or p.shape != (len(self.support),):
            raise ValidationError("NS pair arrays have inconsistent shapes",
                                  [("NS_SHAPE", f"{p.shape} / {q.shape}")])
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValidationError(f"NS p-mass sums to {p.sum():.15g}", [("NS_P_SUM", str(p.sum()))])
        if np.any(p <= 0) or np.any(q < 0):
            raise ValidationError("NS masses must be positive (p) and nonnegative (q)",
                                  [("NS_SIGN", "")])
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dominated(self) -> bool:
        """True when every atom of ``p`` carries ``q``-mass (``p << q``)."""
        return bool(np.all(self.q > 0))

    @property
    def llr(self) -> np.ndarray:
        """``log q - log p`` on the atoms with ``q > 0``."""
        m = self.q > 0
        return np.log(self.q[m]) - np.log(self.p[m])

    def renyi(self, alpha: float) -> float:
        """Classical Petz-type divergence ``D_alpha(p || q)``."""
        if alpha == 1.0:
            if not self.dominated:
                return math.inf
            return float(np.sum(self.p * (np.log(self.p) - np.log(self.q))))
        m = self.q > 0
        if not np.any(m):
            return math.inf
        # overlap minus one, summed termwise so that alpha near 1 keeps precision
        z = np.log(self.q[m]) - np.log(self.p[m])
        excess = float(np.sum(self.p[m] * np.expm1((1.0 - alpha) * z))) - float(self.p[~m].sum())
        if excess <= -1.0 + SUPPORT_CUTOFF:
            return math.inf
        d = math.log1p(excess) / (alpha - 1.0)
        return max(d, 0.0) if d > -1e-10 else d


def nussbaum_szkola(rho, sigma, check: bool = True) -> NsPair:
    """Nussbaum-Szkola pair of ``(rho, sigma)``.

    With ``rho = sum l_i |e_i><e_i|`` and ``sigma = sum m_j |f_j><f_j|``:
    ``p(i,j) = l_i |<e_i|f_j>|^2`` and ``q(i,j) = m_j |<e_i|f_j>|^2``.
    When ``check`` is set the Petz divergences of the pair are compared with
    those of the states at a few orders.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}", code="DIM_MISMATCH")
    lam, e = eigh(rho)
    mu, f = eigh(sigma)
    lam = np.where(lam > SUPPORT_CUTOFF, lam, 0.0)
    mu = np.where(mu > SUPPORT_CUTOFF, mu, 0.0)
    overlap = np.abs(e.conj().T @ f) ** 2
    pm = lam[:, None] * overlap
    qm = mu[None, :] * overlap
    idx = np.argwhere(pm > SUPPORT_CUTOFF * SUPPORT_CUTOFF)
    p = pm[idx[:, 0], idx[:, 1]]
    q = qm[idx[:, 0], idx[:, 1]]
    q = np.where(q > SUPPORT_CUTOFF * SUPPORT_CUTOFF, q, 0.0)
    p = p / p.sum()
    pair = NsPair(tuple(map(tuple, idx.tolist())), p, q)
    if check:
        from .divergence import petz_renyi

        for a in (0.3, 0.5, 0.7, 1.0):
            dq = petz_renyi(rho, sigma, a)
            dc = pair.renyi(a)
            if math.isinf(dq) != math.isinf(dc) or (not math.isinf(dq) and abs(dq - dc) > 1e-10 * max(1.0, abs(dq))):
                raise ValidationError(f"NS pair does not reproduce D_{a}: {dc} vs {dq}",
                                      [("NS_DIVERGENCE", f"alpha={a}")])
    return pair


@dataclass(frozen=True)
class CumulantReport:
    t: float
    lambda0: float
    lambda0_prime: float
    lambda0_second: float
    third_moment: float
    lambda1: float
    lambda1_prime: float
    lambda1_second: float


def _atoms(ns: NsPair):
    """Log-masses of the tilted support (atoms with ``q > 0``)."""
    m = ns.q > 0
    if not np.any(m):
        raise DomainError("empty tilted support: q vanishes on supp(p)", code="EMPTY_TILTED_SUPPORT")
    return np.log(ns.p[m]), np.log(ns.q[m]), float(ns.p[~m].sum())


def lambda0_grid(ns: NsPair, ts):
    """Vectorized ``(Lambda_0, Lambda_0', Lambda_0'', T_0)`` over ``ts``.

    Atoms with ``q = 0`` contribute nothing for ``t > 0``; at ``t = 0`` they
    only add their ``p``-mass to the log-partition.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0) or np.any(ts > 1):
        raise DomainError("t outside [0, 1]", code="T_RANGE")
    logp, logq, orphan = _atoms(ns)
    lam, mean, var, third = kernels.tilted_moments(logp, logq, ts)
    if orphan > 0:
        lam = np.where(ts == 0.0, np.log(np.exp(lam) + orphan), lam)
    return lam, mean, var, third


def lambda1_grid(ns: NsPair, ts):
    """``(Lambda_1, Lambda_1', Lambda_1'')`` from ``log E_q[exp(t log p/q)]``.

    Evaluated from its own definition (roles of ``p`` and ``q`` swapped), not
    through the reflection ``Lambda_1(t) = Lambda_0(1 - t)``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0) or np.any(ts > 1):
        raise DomainError("t outside [0, 1]", code="T_RANGE")
    logp, logq, _ = _atoms(ns)
    # E_q[exp(t log p/q)] = sum q^(1-t) p^t: tilted_moments with (q, p) swapped
    lam, mean, var, _ = kernels.tilted_moments(logq, logp, ts)
    return lam, mean, var


def cumulants(ns: NsPair, t: float) -> CumulantReport:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0, 1]", code="T_RANGE")
    lam0, d1, d2, t3 = (float(a[0]) for a in lambda0_grid(ns, [t]))
    lam1, e1, e2 = (float(a[0]) for a in lambda1_grid(ns, [t]))
    if ns.dominated:
        r0, r1, r2 = (float(a[0]) for a in lambda1_grid(ns, [1.0 - t]))
        if abs(r0 - lam0) > 1e-12 or abs(r1 + d1) > 1e-12 * max(1.0, abs(d1)) or abs(r2 - d2) > 1e-12 * max(1.0, d2):
            raise ValidationError("Lambda_0(t) != Lambda_1(1-t)", [("CUMULANT_SYMMETRY", f"t={t}")])
    return CumulantReport(t, lam0, d1, d2, t3, lam1, e1, e2)


def mixture_grid(ns_list: Sequence[NsPair], weights, ts, j: int = 0):
    """``(Lambda_{j,P}, Lambda_{j,P}', Lambda_{j,P}'')`` for a mixture of letters."""
    weights = np.asarray(weights, dtype=float)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    lam = np.zeros_like(ts)
    d1 = np.zeros_like(ts)
    d2 = np.zeros_like(ts)
    for w, ns in zip(weights, ns_list):
        if w <= 0:
            continue
        if j == 0:
            a, b, c, _ = lambda0_grid(ns, ts)
        else:
            a, b, c = lambda1_grid(ns, ts)
        lam += w * a
        d1 += w * b
        d2 += w * c
    return lam, d1, d2


@dataclass(frozen=True)
class LegendreResult:
    value: float
    t_star: float
    at_boundary: bool


def legendre(ns_list: Sequence[NsPair], weights, j: int, z: float) -> LegendreResult:
    """Fenchel-Legendre transform ``sup_t {t z - Lambda_{j,P}(t)}`` with ``t`` in ``[0, 1]``.

    The objective is strictly concave; golden-section search localizes the
    maximizer, which is then refined by bisection on ``Lambda'(t) = z``.
    """
    if j not in (0, 1):
        raise DomainError("j must be 0 or 1", code="LEGENDRE_INDEX")

    def grid(t):
        return mixture_grid(ns_list, weights, [t], j)

    lo_slope = float(grid(0.0)[1][0])
    hi_slope = float(grid(1.0)[1][0])
    slack = 1e-12 * max(1.0, abs(lo_slope), abs(hi_slope))
    if not lo_slope - slack <= z <= hi_slope + slack:
        raise DomainError(f"z={z} outside achievable slope range [{lo_slope}, {hi_slope}]",
                          code="SLOPE_RANGE", low=lo_slope, high=hi_slope)

    def objective(t):
        return t * z - float(grid(t)[0][0])

    t, _ = golden_max(objective, 0.0, 1.0, tol=1e-9)
    if z <= lo_slope:
        t = 0.0
    elif z >= hi_slope:
        t = 1.0
    else:
        lo, hi = max(0.0, t - 1e-6), min(1.0, t + 1e-6)
        slope = lambda s: float(grid(s)[1][0])
        if slope(lo) > z:
            lo = 0.0
        if slope(hi) < z:
            hi = 1.0
        t = bisect_increasing(slope, z, lo, hi, tol=1e-15)
    boundary = t <= 0.0 or t >= 1.0
    return LegendreResult(objective(t), t, boundary)


@dataclass(frozen=True)
class ExtremalConstants:
    v_min: float
    v_max: float
    t_max: float
    k_max: float
    a_const: float

    @classmethod
    def from_extrema(cls, v_min, v_max, t_max):
        k_max = BRR_CONST * t_max / v_min
        a_const = math.exp(-k_max) / math.sqrt(4.0 * math.pi * v_max)
        return cls(v_min, v_max, t_max, k_max, a_const)

    @property
    def log_a(self) -> float:
        return -self.k_max - 0.5 * math.log(4.0 * math.pi * self.v_max)


GRID_POINTS = 1001


def _refine(f, grid, values, k, sign):
    """Golden-section refinement of ``sign * f`` around grid index ``k``."""
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    x, fx = golden_max(lambda t: sign * f(t), lo, hi, tol=1e-12)
    return max(sign * values[k], fx) * sign


def extremal_constants(ns_list: Sequence[NsPair]) -> ExtremalConstants:
    """Extremes of ``Lambda_0''`` and ``T_0`` over ``t`` in ``[0, 1]`` and all letters."""
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    v_min, v_max, t_max = math.inf, -math.inf, -math.inf
    for ns in ns_list:
        _, _, var, third = lambda0_grid(ns, grid)
        f_var = lambda t, ns=ns: float(lambda0_grid(ns, [t])[2][0])
        f_third = lambda t, ns=ns: float(lambda0_grid(ns, [t])[3][0])
        v_min = min(v_min, _refine(f_var, grid, var, int(np.argmin(var)), -1.0))
        v_max = max(v_max, _refine(f_var, grid, var, int(np.argmax(var)), 1.0))
        t_max = max(t_max, _refine(f_third, grid, third, int(np.argmax(third)), 1.0))
    if v_min < 1e-12:
        raise DomainError(f"V_min={v_min:.3e} vanishes (rate at or below R_inf?)", code="VMIN_ZERO")
    return ExtremalConstants.from_extrema(v_min, v_max, t_max)


@dataclass(frozen=True, eq=False)
class Increment:
    """Finite-support law of one summand ``Z_i``."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        keep = p > 0
        v, p = v[keep], p[keep]
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValidationError("increment needs finite values with positive mass",
                                  [("INCREMENT", str(v))])
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValidationError(f"increment masses sum to {p.sum():.15g}", [("INCREMENT_SUM", "")])
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p / p.sum())

    def cgf(self, t: float):
        """``(Lambda, Lambda', Lambda'', E|Z - Lambda'|^3)`` under the ``t``-tilt."""
        lw = np.log(self.probs) + t * self.values
        m = lw.max()
        w = np.exp(lw - m)
        s = w.sum()
        w /= s
        mean = float(w @ self.values)
        dev = self.values - mean
        return m + math.log(s), mean, float(w @ dev**2), float(w @ np.abs(dev) ** 3)


def ns_increment(ns: NsPair, j: int = 0) -> Increment:
    """Log-likelihood increment of an NS pair.

    ``j = 0``: ``Z = log q - log p`` under ``p``; ``j = 1``: ``Z = log p - log q``
    under the normalized ``q``. Requires ``p << q``.
    """
    if not ns.dominated:
        raise DomainError("NS pair is not dominated (p << q fails)", code="NOT_DOMINATED")
    z = np.log(ns.q) - np.log(ns.p)
    if j == 0:
        return Increment(z, ns.p)
    return Increment(-z, ns.q / ns.q.sum())


@dataclass(frozen=True)
class BrrResult:
    bound: float
    log_bound: float
    log_formula: float
    t_star: float
    rate: float
    m2n: float
    m3n: float
    k_n: float
    precondition_ok: bool


def brr_lower_bound(letters: Sequence[tuple[Increment, int]], z: float) -> BrrResult:
    """Bahadur-Ranga Rao lower bound on ``Pr[(1/n) sum Z_i >= z]``.

    ``letters`` groups the independent summands by law: ``(increment, count)``.
    If ``sqrt(m2n) >= 1 + (1 + K_n)^2`` the bound
    ``exp(-n I(z)) exp(-K_n) / (2 sqrt(2 pi m2n))`` is returned; otherwise the
    bound is 0 and ``precondition_ok`` is false. ``log_formula`` always holds
    the logarithm of the expression, for diagnostics.
    """
    letters = [(inc, int(c)) for inc, c in letters if c > 0]
    n = sum(c for _, c in letters)
    if n < 1:
        raise DomainError("need at least one summand", code="EMPTY_SUM")

    def slope(t):
        return sum(c * inc.cgf(t)[1] for inc, c in letters) / n

    z_max = sum(c * inc.values.max() for inc, c in letters) / n
    z_mean = slope(0.0)
    if not z_mean - 1e-12 <= z < z_max:
        raise DomainError(f"z={z} not bracketable: need mean {z_mean} <= z < max {z_max}",
                          code="TSTAR_BRACKET")
    hi = 1.0
    while slope(hi) < z:
        hi *= 2.0
        if hi > 1e8:
            raise DomainError(f"could not bracket t* for z={z}", code="TSTAR_BRACKET")
    t = 0.0 if z <= z_mean else bisect_increasing(slope, z, 0.0, hi, tol=1e-12)
    stats = [(inc.cgf(t), c) for inc, c in letters]
    lam_sum = sum(c * s[0] for s, c in stats)
    m2n = sum(c * s[2] for s, c in stats)
    m3n = sum(c * s[3] for s, c in stats)
    rate = z * t - lam_sum / n
    k_n = BRR_CONST * m3n / m2n
    log_formula = -n * rate - k_n - math.log(2.0 * math.sqrt(2.0 * math.pi * m2n))
    ok = math.sqrt(m2n) >= 1.0 + (1.0 + k_n) ** 2
    if ok:
        return BrrResult(math.exp(log_formula), log_formula, log_formula, t, rate, m2n, m3n, k_n, True)
    return BrrResult(0.0, -math.inf, log_formula, t, rate, m2n, m3n, k_n, False)

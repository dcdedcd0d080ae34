"""Exact references for small instances.

Quantum Neyman-Pearson tests on explicit tensor powers, classical randomized
Neyman-Pearson tests on product distributions, and exact tail probabilities
of sums of independent finite-support variables. The classical routines
convolve per-letter laws exactly, merging support points closer than a
relative ``1e-12``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import SymmetricCqChannel
from .errors import ConvergenceError, DomainError, SupportBlowupError, ValidationError
from .largedev import Increment, NsPair
from .qcore import hermitian, kron_all, support_projector, trace_product

SUPPORT_CAP = 10_000_000
DIM_CAP = 1024
MERGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class TestOperator:
    """A test ``0 <= Q <= I``; eigenvalues within ``1e-12`` of ``[0, 1]`` are clamped."""

    __test__ = False  # not a pytest class

    matrix: np.ndarray

    def __post_init__(self):
        q = hermitian(self.matrix)
        w, u = np.linalg.eigh(q)
        if w[0] < -1e-12 or w[-1] > 1.0 + 1e-12:
            raise ValidationError(f"test spectrum [{w[0]:.3e}, {w[-1]:.3e}] leaves [0, 1]",
                                  [("TEST_RANGE", "")])
        w = np.clip(w, 0.0, 1.0)
        q = (u * w) @ u.conj().T
        q = 0.5 * (q + q.conj().T)
        q.setflags(write=False)
        object.__setattr__(self, "matrix", q)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def type_errors(q, rho, sigma) -> tuple[float, float]:
    """``(Tr[(I - Q) rho], Tr[Q sigma])``."""
    q = q.matrix if isinstance(q, TestOperator) else TestOperator(q).matrix
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if not q.shape == rho.shape == sigma.shape:
        raise DomainError(f"dimension mismatch {q.shape}, {rho.shape}, {sigma.shape}", code="DIM_MISMATCH")
    alpha = 1.0 - trace_product(q, rho)
    beta = trace_product(q, sigma)
    return min(max(alpha, 0.0), 1.0), min(max(beta, 0.0), 1.0)


def _positive_projector(h: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(hermitian(h))
    scale = max(1.0, float(np.max(np.abs(w))))
    cols = u[:, w > 1e-14 * scale]
    return cols @ cols.conj().T


@dataclass(frozen=True, eq=False)
class NpResult:
    alpha_hat: float
    t: float
    beta: float
    test: np.ndarray

    def __iter__(self):
        return iter((self.alpha_hat, self.t))


def min_type1(rho, sigma, mu: float, tol: float = 1e-13) -> NpResult:
    """Minimum type-I error over all tests with type-II error at most ``mu``.

    Tests ``{rho - t sigma > 0}`` have type-II error nonincreasing in ``t``;
    ``t`` is bisected to bracket ``mu`` and the two bracketing projectors are
    mixed so that the type-II error equals ``mu``.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    d = rho.shape[0]
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}", code="DIM_MISMATCH")
    if d > DIM_CAP:
        raise SupportBlowupError(f"dimension {d} exceeds cap {DIM_CAP}", code="DIM_CAP")
    if not 0.0 < mu:
        raise DomainError(f"mu={mu} must be positive", code="MU_RANGE")
    if mu >= 1.0:
        return NpResult(0.0, 0.0, 1.0, np.eye(d, dtype=complex))
    supp = support_projector(rho)
    beta_supp = trace_product(supp, sigma)
    if beta_supp <= mu:
        alpha = max(0.0, 1.0 - trace_product(supp, rho))
        return NpResult(alpha, 0.0, beta_supp, supp)

    def beta_of(t):
        proj = _positive_projector(rho - t * sigma)
        return trace_product(proj, sigma), proj

    lo, hi = 0.0, 1.0
    b_lo, p_lo = beta_supp, supp
    b_hi, p_hi = beta_of(hi)
    while b_hi > mu:
        lo, b_lo, p_lo = hi, b_hi, p_hi
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("could not bracket the Neyman-Pearson threshold", code="NP_BRACKET")
        b_hi, p_hi = beta_of(hi)
    for _ in range(2000):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        b_mid, p_mid = beta_of(mid)
        if b_mid > mu:
            lo, b_lo, p_lo = mid, b_mid, p_mid
        else:
            hi, b_hi, p_hi = mid, b_mid, p_mid
    lam = 1.0 if b_lo == b_hi else (mu - b_hi) / (b_lo - b_hi)
    lam = min(max(lam, 0.0), 1.0)
    test = lam * p_lo + (1.0 - lam) * p_hi
    alpha, beta = type_errors(TestOperator(test), rho, sigma)
    return NpResult(alpha, 0.5 * (lo + hi), beta, test)


def min_type1_product(ch: SymmetricCqChannel, x_seq: Sequence[int], sigma, mu: float) -> float:
    """``min_type1`` for ``W_{x_1} (x) ... (x) W_{x_n}`` against ``sigma^(x)n``."""
    n = len(x_seq)
    if n < 1:
        raise DomainError("empty input sequence", code="EMPTY_SEQUENCE")
    if ch.dim ** n > DIM_CAP:
        raise SupportBlowupError(f"dimension {ch.dim}^{n} exceeds cap {DIM_CAP}", code="DIM_CAP")
    rho = kron_all([ch.output(x).matrix for x in x_seq])
    big_sigma = kron_all([sigma] * n)
    return min_type1(rho, big_sigma, mu).alpha_hat


@dataclass(frozen=True, eq=False)
class LlrLaw:
    """Merged law of a summed statistic with its masses under two measures."""

    values: np.ndarray
    pmass: np.ndarray
    qmass: np.ndarray


def convolve_letters(letters: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
                     cap: int = SUPPORT_CAP) -> LlrLaw:
    """Exact law of ``sum_i v_i`` for independent letters ``(values, pmass, qmass)``."""
    values = np.zeros(1)
    pmass = np.ones(1)
    qmass = np.ones(1)
    for v, p, q in letters:
        v = np.asarray(v, dtype=float)
        order = np.argsort(v, kind="stable")
        if values.size * v.size > cap:
            raise SupportBlowupError(
                f"support {values.size}x{v.size} exceeds cap {cap}; use a Monte Carlo estimate instead",
                code="SUPPORT_CAP", size=values.size * v.size)
        values, pmass, qmass = kernels.convolve_merge(
            values, pmass, qmass, v[order], np.asarray(p, float)[order], np.asarray(q, float)[order],
            MERGE_RTOL)
    return LlrLaw(values, pmass, qmass)


def ns_letter(ns: NsPair):
    """``(log p - log q, p, q)``; atoms with ``q = 0`` sit at ``+inf``."""
    with np.errstate(divide="ignore"):
        llr = np.log(ns.p) - np.log(ns.q)
    return llr, ns.p, ns.q


def classical_np_product(ns_list: Sequence[NsPair], mu: float, cap: int = SUPPORT_CAP) -> float:
    """Randomized Neyman-Pearson minimum type-I error for ``prod p_i`` vs ``prod q_i``.

    Atoms are accepted in decreasing likelihood ratio until the ``q``-budget
    ``mu`` is spent; the boundary atom is accepted with the fraction that
    exhausts the budget exactly.
    """
    if not 0.0 < mu:
        raise DomainError(f"mu={mu} must be positive", code="MU_RANGE")
    law = convolve_letters([ns_letter(ns) for ns in ns_list], cap)
    budget = mu
    accepted = 0.0
    for k in range(law.values.size - 1, -1, -1):
        p, q = law.pmass[k], law.qmass[k]
        if q <= budget:
            accepted += p
            budget -= q
        else:
            accepted += p * budget / q
            break
    return min(max(1.0 - accepted, 0.0), 1.0)


def _as_increment(inc) -> Increment:
    if isinstance(inc, Increment):
        return inc
    values, probs = inc
    return Increment(np.asarray(values, float), np.asarray(probs, float))


def tail_tolerance(threshold: float) -> float:
    return 1e-10 * max(1.0, abs(threshold))


def exact_tail(increments, z: float, cap: int = SUPPORT_CAP) -> float:
    """Exact ``Pr[(1/n) sum_i Z_i >= z]`` for independent finite-support ``Z_i``.

    ``increments`` is a sequence of ``Increment`` objects or ``(values, probs)``
    pairs, one per summand. Sums within a relative ``1e-10`` of ``n z`` count
    as meeting the threshold.
    """
    incs = [_as_increment(i) for i in increments]
    n = len(incs)
    if n < 1:
        raise DomainError("need at least one summand", code="EMPTY_SUM")
    law = convolve_letters([(i.values, i.probs, np.zeros_like(i.probs)) for i in incs], cap)
    thr = n * z
    mask = law.values >= thr - tail_tolerance(thr)
    return float(min(law.pmass[mask].sum(), 1.0))


def exact_tail_iid(increment, n: int, z: float, cap: int = SUPPORT_CAP) -> float:
    inc = _as_increment(increment)
    return exact_tail([inc] * n, z, cap)


def ns_log_lik_increment(ns: NsPair) -> Increment:
    """``log q - log p`` under ``p`` (requires ``q > 0`` on the support of ``p``)."""
    if not ns.dominated:
        raise DomainError("NS pair is not dominated (p << q fails)", code="NOT_DOMINATED")
    return Increment(np.log(ns.q) - np.log(ns.p), ns.p)


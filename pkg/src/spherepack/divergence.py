"""Quantum Renyi divergences and the channel rates built from them.

Infinite divergences are returned as ``math.inf`` chosen explicitly from a
support test, never produced by ``log(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import SymmetricCqChannel, probability_vector
from .errors import ConvergenceError, DomainError
from .qcore import (
    SUPPORT_CUTOFF,
    eigh,
    frac_power,
    log_on_support,
    support_projector,
    trace_product,
)

INF = math.inf
CLAMP_TOL = 1e-10
# below this distance from alpha = 1 the overlap is evaluated as 1 + small
NEAR_ONE = 1e-3


def _clamp(value: float) -> float:
    return 0.0 if -CLAMP_TOL <= value < 0.0 else value


def relative_entropy(rho, sigma) -> float:
    """Umegaki relative entropy ``Tr[rho (log rho - log sigma)]``."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}", code="DIM_MISMATCH")
    outside = 1.0 - trace_product(rho, support_projector(sigma))
    if outside > SUPPORT_CUTOFF:
        return INF
    value = trace_product(rho, log_on_support(rho)) - trace_product(rho, log_on_support(sigma))
    return _clamp(value)


def petz_renyi(rho, sigma, alpha: float) -> float:
    """Petz Renyi divergence ``log Tr[rho^a sigma^(1-a)] / (a - 1)`` for ``0 < a <= 1``."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1]", code="ALPHA_RANGE")
    if alpha == 1.0:
        return relative_entropy(rho, sigma)
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch {rho.shape} vs {sigma.shape}", code="DIM_MISMATCH")
    if 1.0 - alpha < NEAR_ONE:
        return _near_one(rho, sigma, alpha)
    overlap = trace_product(frac_power(rho, alpha), frac_power(sigma, 1.0 - alpha))
    if overlap <= SUPPORT_CUTOFF:
        return INF
    return _clamp(math.log(overlap) / (alpha - 1.0))


def _near_one(rho, sigma, alpha: float) -> float:
    """``log Tr[rho^a sigma^(1-a)]`` written as ``log1p`` of a sum of ``expm1`` terms.

    With ``w_ij = lam_i |<e_i|f_j>|^2`` the overlap is
    ``sum w_ij exp((1-a) log(mu_j / lam_i))``; subtracting ``Tr rho = 1``
    termwise avoids the cancellation in ``log(overlap) / (a - 1)``.
    """
    lam, e = eigh(rho)
    mu, f = eigh(sigma)
    lam = np.where(lam > SUPPORT_CUTOFF, lam, 0.0)
    mu = np.where(mu > SUPPORT_CUTOFF, mu, 0.0)
    w = lam[:, None] * np.abs(e.conj().T @ f) ** 2
    w = w / w.sum()
    live = w > SUPPORT_CUTOFF * SUPPORT_CUTOFF
    hit = live & (mu[None, :] > 0)
    if not np.any(hit):
        return INF
    i, j = np.nonzero(hit)
    z = np.log(mu[j]) - np.log(lam[i])
    excess = float(np.sum(w[i, j] * np.expm1((1.0 - alpha) * z))) - float(w[live & ~hit].sum())
    if excess <= -1.0 + SUPPORT_CUTOFF:
        return INF
    return _clamp(math.log1p(excess) / (alpha - 1.0))


def conditional_renyi(ch: SymmetricCqChannel, sigma, p, alpha: float) -> float:
    """``sum_x P(x) D_alpha(W_x || sigma)``; infinite if any term with ``P(x) > 0`` is."""
    p = probability_vector(p, ch.k)
    total = 0.0
    for px, w in zip(p, ch.outputs):
        if px > 0:
            d = petz_renyi(w, sigma, alpha)
            if d == INF:
                return INF
            total += px * d
    return total


def mutual_information(ch: SymmetricCqChannel, p) -> float:
    p = probability_vector(p, ch.k)
    return conditional_renyi(ch, ch.average_output(p), p, 1.0)


@lru_cache(maxsize=64)
def mutual_information_and_capacity(ch: SymmetricCqChannel, samples: int = 50, seed: int = 0):
    """Return ``(I(U, W), C)``.

    For symmetric channels the uniform input is capacity achieving; this is
    spot-checked against ``samples`` random input distributions.
    """
    i_uniform = mutual_information(ch, ch.uniform())
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        p = rng.dirichlet(np.ones(ch.k))
        p /= p.sum()
        i_p = mutual_information(ch, p)
        if i_p > i_uniform + 1e-9:
            raise ConvergenceError(
                f"input {p} beats the uniform input ({i_p:.12g} > {i_uniform:.12g})",
                code="UNIFORM_NOT_OPTIMAL")
    return i_uniform, i_uniform


def capacity(ch: SymmetricCqChannel) -> float:
    return mutual_information_and_capacity(ch)[1]


@dataclass(frozen=True)
class RInfinityResult:
    value: float
    sigma: np.ndarray
    residual: float
    iterations: int


def _projectors_commute(projs) -> bool:
    for i, a in enumerate(projs):
        for b in projs[i + 1:]:
            if np.max(np.abs(a @ b - b @ a)) > 1e-10:
                return False
    return True


def r_infinity_solve(ch: SymmetricCqChannel, tol: float = 1e-9, max_iter: int = 10_000) -> RInfinityResult:
    """Minimize ``-(1/K) sum_x log Tr[W_x^0 sigma]`` over density operators.

    Uses the multiplicative update ``sigma <- G^(1/2) sigma G^(1/2)`` with
    ``G = (1/K) sum_x W_x^0 / Tr[W_x^0 sigma]`` (the EM update on the common
    eigenbasis when the projectors commute). By concavity of the log
    objective, ``lambda_max(G) - 1`` bounds the optimality gap and serves as
    the stopping residual.
    """
    d = ch.dim
    if all(np.linalg.eigvalsh(w.matrix)[0] > SUPPORT_CUTOFF for w in ch.outputs):
        return RInfinityResult(0.0, np.eye(d) / d, 0.0, 0)
    weights = ch.uniform()
    projs = [support_projector(w) for w in ch.outputs]

    if _projectors_commute(projs):
        # binary weights: equal eigenvalues only for identical membership patterns
        _, basis = eigh(sum(2.0 ** -(i % 52) * pr for i, pr in enumerate(projs)))
        diag = np.array([np.real(np.diag(basis.conj().T @ pr @ basis)) for pr in projs])
        diag = np.where(diag > 0.5, 1.0, 0.0)
        lam = np.full(d, 1.0 / d)
        best = None
        for it in range(max_iter + 1):
            overlaps = diag @ lam
            grad = weights @ (diag / overlaps[:, None])
            value = -float(weights @ np.log(overlaps))
            residual = float(np.max(grad) - 1.0)
            best = (value, lam, residual)
            if residual <= tol:
                sigma = (basis * lam) @ basis.conj().T
                return RInfinityResult(max(value, 0.0), sigma, max(residual, 0.0), it)
            lam = lam * grad
            lam /= lam.sum()
    else:
        sigma = np.eye(d, dtype=complex) / d
        best = None
        for it in range(max_iter + 1):
            overlaps = np.array([trace_product(pr, sigma) for pr in projs])
            g = sum(wx * pr / ov for wx, pr, ov in zip(weights, projs, overlaps))
            value = -float(weights @ np.log(overlaps))
            gw, gu = np.linalg.eigh(g)
            residual = float(gw[-1] - 1.0)
            best = (value, sigma, residual)
            if residual <= tol:
                return RInfinityResult(max(value, 0.0), sigma, max(residual, 0.0), it)
            root = (gu * np.sqrt(np.clip(gw, 0.0, None))) @ gu.conj().T
            sigma = root @ sigma @ root
            sigma = 0.5 * (sigma + sigma.conj().T)
            sigma /= np.trace(sigma).real
    raise ConvergenceError(
        f"R_inf iteration did not converge in {max_iter} steps "
        f"(best value {best[0]:.12g}, residual {best[2]:.3e})",
        best_value=best[0], residual=best[2])


@lru_cache(maxsize=64)
def r_infinity(ch: SymmetricCqChannel) -> float:
    """Rate below which the sphere-packing exponent is infinite (nats).

    Evaluated with the uniform input, which is optimal for symmetric channels.
    """
    return r_infinity_solve(ch).value

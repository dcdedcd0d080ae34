"""Invariant suite behind ``spherepack verify``.

Every check is a small function returning ``(passed, detail)``; the suite
runs them on one or more channels and reports a JSON-friendly summary.
"""

from __future__ import annotations

import math
import traceback
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .channel import SymmetricCqChannel, preset
from .divergence import capacity, mutual_information, petz_renyi, r_infinity
from .errors import SpherePackError
from .exponent import (
    _uniform_state,
    e0,
    e0_uniform,
    esp,
    esp_dual,
    esp_point,
    invariance_check,
    saddle_fixed_point,
    sigma_star,
)
from .largedev import (
    extremal_constants,
    lambda0_grid,
    lambda1_grid,
    legendre,
    mixture_grid,
    nussbaum_szkola,
)
from .oracle import TestOperator, classical_np_product, min_type1, min_type1_product, type_errors
from .qcore import frac_power, trace_distance

DEFAULT_CHANNELS = (("bsc", {"p": 0.1}), ("bec", {"e": 0.3}), ("pure-hadamard", {}),
                    ("mixed-hadamard", {"eps": 0.1}))


@dataclass(frozen=True)
class CheckResult:
    channel: str
    name: str
    passed: bool
    detail: str

    def to_dict(self):
        return {"channel": self.channel, "check": self.name, "passed": self.passed, "detail": self.detail}


def interior_rates(ch: SymmetricCqChannel, count: int = 3) -> list[float]:
    lo, hi = r_infinity(ch), capacity(ch)
    return [lo + (hi - lo) * f for f in np.linspace(0.25, 0.75, count)]


def check_frac_power(ch, rng):
    worst = 0.0
    for w in ch.outputs:
        for a, b in ((0.3, 2.0), (0.5, 0.5), (1.7, 0.4)):
            worst = max(worst, np.max(np.abs(frac_power(frac_power(w, a), b) - frac_power(w, a * b))))
        proj = frac_power(w, 0.0)
        worst = max(worst, np.max(np.abs(proj @ proj - proj)), np.max(np.abs(proj @ w.matrix - w.matrix @ proj)))
    return worst <= 1e-9, f"max deviation {worst:.3e}"


def check_conjugation(ch, rng):
    avg = ch.average_output()
    v = ch.v.matrix
    gap = float(np.max(np.abs(v @ avg - avg @ v)))
    return gap <= 1e-10, f"||[V, avg W]|| = {gap:.3e}"


def check_capacity_uniform(ch, rng):
    c = capacity(ch)
    worst = max(mutual_information(ch, rng.dirichlet(np.ones(ch.k))) - c for _ in range(20))
    return worst <= 1e-9, f"max I(P) - C = {worst:.3e}"


def check_e0_uniform_optimal(ch, rng):
    worst = -math.inf
    for s in (0.1, 0.5, 1.0, 2.0):
        u = e0_uniform(ch, s)
        for _ in range(50):
            worst = max(worst, e0(ch, rng.dirichlet(np.ones(ch.k)), s) - u)
    return worst <= 1e-10, f"max E0(s,P) - E0(s,U) = {worst:.3e}"


def check_e0_concave(ch, rng):
    grid = np.linspace(0.0, 5.0, 101)
    vals = np.array([e0_uniform(ch, s) for s in grid])
    worst = float(np.max(np.diff(vals, 2)))
    return worst <= 1e-8, f"max second difference {worst:.3e}"


def check_saddle(ch, rng):
    worst_res = worst_eq = worst_fp = 0.0
    for r in interior_rates(ch):
        sp = sigma_star(ch, r)
        fp = saddle_fixed_point(ch, ch.uniform(), sp.alpha_star, np.eye(ch.dim) / ch.dim)
        worst_res = max(worst_res, sp.fixed_point_residual)
        worst_eq = max(worst_eq, sp.equalization_gap)
        worst_fp = max(worst_fp, trace_distance(fp.sigma, sp.sigma_star))
    ok = worst_res <= 1e-10 and worst_eq <= 1e-8 and worst_fp <= 1e-9
    return ok, f"residual {worst_res:.3e}, equalization {worst_eq:.3e}, iterate gap {worst_fp:.3e}"


def check_invariance(ch, rng):
    worst = 0.0
    for r in interior_rates(ch):
        e = esp(ch, r)
        for _ in range(20):
            worst = max(worst, abs(invariance_check(ch, rng.dirichlet(np.ones(ch.k)), r) - e))
    return worst <= 1e-8, f"max |F(P) - E_sp| = {worst:.3e}"


def check_envelope(ch, rng):
    h = 1e-4
    worst = 0.0
    for r in interior_rates(ch):
        fd = (esp(ch, r + h) - esp(ch, r - h)) / (2 * h)
        worst = max(worst, abs(fd + esp_point(ch, r).s_star))
    return worst <= 1e-4, f"max |dE/dR + s*| = {worst:.3e}"


def check_dual(ch, rng):
    worst = 0.0
    for r in interior_rates(ch):
        worst = max(worst, abs(esp_dual(ch, r).value - esp(ch, r)))
    return worst <= 1e-7, f"max |primal - dual| = {worst:.3e}"


def _ns_at(ch, r):
    sp = sigma_star(ch, r)
    return sp, [nussbaum_szkola(w.matrix, sp.sigma_star) for w in ch.outputs]


def check_legendre(ch, rng):
    worst = 0.0
    u = ch.uniform()
    for r in interior_rates(ch):
        sp, ns = _ns_at(ch, r)
        phi = sp.esp
        l0 = legendre(ns, u, 0, phi - r)
        l1 = legendre(ns, u, 1, r - phi)
        t_star = sp.s_star / (1 + sp.s_star)
        worst = max(worst, abs(l0.value - phi), abs(l1.value - r), abs(l0.t_star - t_star))
    return worst <= 1e-8, f"max identity gap {worst:.3e}"


def check_cumulant_symmetry(ch, rng):
    grid = np.linspace(0.0, 1.0, 101)
    worst = 0.0
    for r in interior_rates(ch):
        _, ns_list = _ns_at(ch, r)
        for ns in ns_list:
            a, d1, d2, _ = lambda0_grid(ns, grid)
            b, e1, e2 = lambda1_grid(ns, grid[::-1])
            worst = max(worst, np.max(np.abs(a - b)), np.max(np.abs(d1 + e1)), np.max(np.abs(d2 - e2)))
    return worst <= 1e-12, f"max symmetry gap {worst:.3e}"


def check_e0_bridge(ch, rng):
    worst = 0.0
    u = ch.uniform()
    for s in (0.25, 0.5, 1.0, 2.0):
        sigma = _uniform_state(ch, s)[1]
        ns = [nussbaum_szkola(w.matrix, sigma) for w in ch.outputs]
        lam = mixture_grid(ns, u, [s / (1 + s)], 0)[0][0]
        worst = max(worst, abs(e0(ch, u, s) + (1 + s) * lam))
    return worst <= 1e-10, f"max |E0 + (1+s) Lambda| = {worst:.3e}"


def check_positivity(ch, rng):
    v_min = math.inf
    for r in interior_rates(ch):
        _, ns = _ns_at(ch, r)
        v_min = min(v_min, extremal_constants(ns).v_min)
    return v_min > 0, f"V_min = {v_min:.6g}"


def check_divergence_preservation(ch, rng):
    worst = 0.0
    for r in interior_rates(ch, 1):
        sp, ns_list = _ns_at(ch, r)
        for w, ns in zip(ch.outputs, ns_list):
            for a in np.linspace(0.1, 1.0, 10):
                dq, dc = petz_renyi(w.matrix, sp.sigma_star, float(a)), ns.renyi(float(a))
                worst = max(worst, abs(dq - dc))
    return worst <= 1e-10, f"max |D(p||q) - D(W||sigma)| = {worst:.3e}"


def check_np_optimality(ch, rng):
    r = interior_rates(ch, 1)[0]
    sp = sigma_star(ch, r)
    rho = ch.outputs[0].matrix
    worst = -math.inf
    for mu in (0.05, 0.3, 0.7):
        alpha_hat = min_type1(rho, sp.sigma_star, mu).alpha_hat
        for _ in range(100):
            u, _ = np.linalg.qr(rng.normal(size=(ch.dim, ch.dim)) + 1j * rng.normal(size=(ch.dim, ch.dim)))
            q = (u * rng.random(ch.dim)) @ u.conj().T
            a, b = type_errors(TestOperator(q), rho, sp.sigma_star)
            if b <= mu:
                worst = max(worst, alpha_hat - a)
    return worst <= 1e-9, f"max alpha_hat - alpha(Q) = {worst:.3e}"


def check_np_commuting(ch, rng):
    if not all(np.allclose(w.matrix, np.diag(np.diag(w.matrix))) for w in ch.outputs):
        return True, "skipped (non-commuting outputs)"
    r = interior_rates(ch, 1)[0]
    sigma = sigma_star(ch, r).sigma_star
    worst = 0.0
    for n in (1, 2, 3):
        if ch.dim ** n > 64:
            break
        ns = [nussbaum_szkola(ch.outputs[0].matrix, sigma)] * n
        for mu in (0.1, 0.5):
            worst = max(worst, abs(classical_np_product(ns, mu) - min_type1_product(ch, [1] * n, sigma, mu)))
    return worst <= 1e-10, f"max quantum/classical gap {worst:.3e}"


CHECKS: dict[str, Callable] = {
    "frac_power_composition": check_frac_power,
    "conjugation_invariance": check_conjugation,
    "capacity_uniform_optimal": check_capacity_uniform,
    "e0_uniform_optimal": check_e0_uniform_optimal,
    "e0_concave": check_e0_concave,
    "saddle_certified": check_saddle,
    "invariance": check_invariance,
    "envelope_slope": check_envelope,
    "primal_dual_agree": check_dual,
    "legendre_identities": check_legendre,
    "cumulant_symmetry": check_cumulant_symmetry,
    "e0_bridge": check_e0_bridge,
    "variance_positive": check_positivity,
    "divergence_preservation": check_divergence_preservation,
    "np_optimality": check_np_optimality,
    "np_commuting_agreement": check_np_commuting,
}


def preset_label(name: str, params: dict | None) -> str:
    if not params:
        return name
    return name + "(" + ",".join(f"{k}={v:g}" for k, v in sorted(params.items())) + ")"


def run_suite(channels: Sequence[tuple[str, SymmetricCqChannel]] | None = None,
              checks: Sequence[str] | None = None, seed: int = 0) -> list[CheckResult]:
    if channels is None:
        channels = [(preset_label(name, params), preset(name, params)) for name, params in DEFAULT_CHANNELS]
    names = list(CHECKS) if checks is None else list(checks)
    out = []
    for label, ch in channels:
        for name in names:
            rng = np.random.default_rng(seed)
            try:
                ok, detail = CHECKS[name](ch, rng)
            except SpherePackError as exc:
                ok, detail = False, f"{exc.code}: {exc}"
            except Exception as exc:  # a crashing check is a failed check
                ok, detail = False, "".join(traceback.format_exception_only(type(exc), exc)).strip()
            out.append(CheckResult(label, name, bool(ok), detail))
    return out


def summarize(results: Sequence[CheckResult]) -> dict:
    passed = sum(r.passed for r in results)
    return {"passed": passed, "failed": len(results) - passed, "details": [r.to_dict() for r in results]}

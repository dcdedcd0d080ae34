import math

import numpy as np
import pytest

from oracles import bsc_esp, bsc_gallager, random_density
from spherepack.divergence import capacity, petz_renyi, r_infinity
from spherepack.errors import ConvergenceError, DomainError
from spherepack.exponent import (
    curvature,
    curvature_bound,
    curve_violations,
    e0,
    e0_uniform,
    e0_uniform_slope,
    esp_curve,
    esp_dual,
    esp_point,
    in_positive_set,
    invariance_check,
    saddle_fixed_point,
    sigma_star,
)
from spherepack.qcore import trace_distance


def interior(ch, fractions=(0.25, 0.5, 0.75)):
    lo, hi = r_infinity(ch), capacity(ch)
    return [lo + f * (hi - lo) for f in fractions]


def test_e0_zero_at_origin(mixed):
    assert e0(mixed, [0.3, 0.7], 0.0) == 0.0


def test_e0_bsc_closed_form(bsc):
    assert e0(bsc, bsc.uniform(), 1.0) == pytest.approx(bsc_gallager(1.0, 0.1), abs=1e-13)
    assert e0(bsc, bsc.uniform(), 1.0) == pytest.approx(0.22314, abs=1e-5)


def test_e0_degenerate_input(bsc):
    assert e0(bsc, [1.0, 0.0], 1.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("s", [0.1, 0.5, 1.0, 2.0])
def test_uniform_input_optimal(mixed, bec, s):
    rng = np.random.default_rng(int(s * 10))
    for ch in (mixed, bec):
        best = e0_uniform(ch, s)
        for _ in range(50):
            assert e0(ch, rng.dirichlet([1, 1]), s) <= best + 1e-10


@pytest.mark.parametrize("name", ["bsc", "mixed", "pure", "bec"])
def test_e0_concave(name, request):
    ch = request.getfixturevalue(name)
    vals = np.array([e0_uniform(ch, s) for s in np.linspace(0, 5, 101)])
    assert np.max(np.diff(vals, 2)) <= 1e-8


@pytest.mark.parametrize("s", [0.2, 1.0, 4.0])
def test_slope_matches_finite_difference(mixed, s):
    h = 1e-6
    fd = (e0_uniform(mixed, s + h) - e0_uniform(mixed, s - h)) / (2 * h)
    assert e0_uniform_slope(mixed, s) == pytest.approx(fd, abs=1e-8)


def test_slope_at_zero_is_capacity(mixed):
    assert e0_uniform_slope(mixed, 1e-7) == pytest.approx(capacity(mixed), abs=1e-6)


@pytest.mark.parametrize("rate", [0.05, 0.1, 0.2, 0.3])
def test_bsc_exponent_oracle(bsc, rate):
    ref, s_ref = bsc_esp(0.1, rate)
    pt = esp_point(bsc, rate)
    assert pt.esp == pytest.approx(ref, abs=1e-10)
    assert pt.s_star == pytest.approx(s_ref, abs=1e-5)
    assert pt.slope == -pt.s_star


def test_bsc_anchor(bsc):
    pt = esp_point(bsc, 0.2)
    assert pt.esp == pytest.approx(0.0403, abs=1e-3)
    assert pt.s_star == pytest.approx(0.55, abs=1e-2)


def test_exponent_at_capacity(bsc):
    pt = esp_point(bsc, capacity(bsc))
    assert pt.esp == 0.0 and pt.s_star == 0.0


def test_exponent_below_r_inf(pure):
    assert esp_point(pure, 0.10).infinite


def test_bracket_cap_reports_divergence(pure, monkeypatch):
    # in double precision the slope reaches R_inf before s = 1e4, so lower the cap
    import spherepack.exponent as mod

    monkeypatch.setattr(mod, "S_CAP", 4.0)
    mod.esp_point.cache_clear()
    with pytest.raises(ConvergenceError) as err:
        esp_point(pure, r_infinity(pure) + 1e-5)
    mod.esp_point.cache_clear()
    assert err.value.code == "BRACKET_CAP"


@pytest.mark.parametrize("name", ["bsc", "mixed", "pure", "bec"])
def test_envelope_slope(name, request):
    ch = request.getfixturevalue(name)
    h = 1e-4
    for rate in interior(ch):
        fd = (esp_point(ch, rate + h).esp - esp_point(ch, rate - h).esp) / (2 * h)
        assert abs(fd + esp_point(ch, rate).s_star) <= 1e-4


def test_sigma_star_bsc_invariant(bsc):
    sp = sigma_star(bsc, 0.2)
    v = bsc.v.matrix
    assert np.allclose(sp.sigma_star, np.diag(np.diag(sp.sigma_star)), atol=1e-14)
    assert np.max(np.abs(v @ sp.sigma_star @ v.conj().T - sp.sigma_star)) <= 1e-10
    assert abs(np.trace(sp.sigma_star).real - 1) <= 1e-10
    assert sp.alpha_star == pytest.approx(1 / (1 + sp.s_star), abs=1e-12)


@pytest.mark.parametrize("name", ["mixed", "pure", "bec"])
def test_sigma_star_equalization(name, request):
    ch = request.getfixturevalue(name)
    for rate in interior(ch):
        sp = sigma_star(ch, rate)
        divs = [petz_renyi(w.matrix, sp.sigma_star, sp.alpha_star) for w in ch.outputs]
        assert max(divs) - min(divs) <= 1e-8
        assert sp.fixed_point_residual <= 1e-10
        assert sp.esp >= 0


def test_sigma_star_domain(bsc):
    with pytest.raises(DomainError):
        sigma_star(bsc, capacity(bsc) + 0.01)


def test_fixed_point_point_mass(mixed):
    fp = saddle_fixed_point(mixed, [0.0, 1.0], 0.6, np.eye(2) / 2)
    assert trace_distance(fp.sigma, mixed.output(2).matrix) <= 1e-12
    assert fp.residual <= 1e-12


def test_fixed_point_bsc_uniform(bsc):
    fp = saddle_fixed_point(bsc, bsc.uniform(), 0.65, np.diag([0.8, 0.2]))
    assert np.allclose(fp.sigma, np.eye(2) / 2, atol=1e-10)


def test_fixed_point_nonuniform_converges(mixed):
    sigma0 = random_density(np.random.default_rng(2), 2)
    fp = saddle_fixed_point(mixed, [0.3, 0.7], 0.5, sigma0)
    assert fp.residual <= 1e-12
    again = saddle_fixed_point(mixed, [0.3, 0.7], 0.5, fp.sigma)
    assert trace_distance(again.sigma, fp.sigma) <= 1e-11


def test_fixed_point_support_collapse(pure):
    with pytest.raises(ConvergenceError) as err:
        saddle_fixed_point(pure, [1.0, 0.0], 0.5, np.diag([0.0, 1.0]))
    assert err.value.code == "SUPPORT_COLLAPSE"


@pytest.mark.parametrize("name", ["bsc", "mixed"])
def test_invariance_random_inputs(name, request):
    ch = request.getfixturevalue(name)
    rng = np.random.default_rng(7)
    rate = interior(ch)[1]
    e = esp_point(ch, rate).esp
    assert invariance_check(ch, ch.uniform(), rate) == pytest.approx(e, abs=1e-12)
    for _ in range(20):
        assert invariance_check(ch, rng.dirichlet([1, 1]), rate) == pytest.approx(e, abs=1e-8)
    assert invariance_check(ch, [1.0, 0.0], rate) == pytest.approx(e, abs=1e-8)


@pytest.mark.parametrize("name", ["bsc", "mixed", "pure"])
def test_primal_dual_agree(name, request):
    ch = request.getfixturevalue(name)
    for rate in interior(ch):
        assert esp_dual(ch, rate).value == pytest.approx(esp_point(ch, rate).esp, abs=1e-7)


def test_positive_set_membership(mixed):
    rate = interior(mixed)[1]
    assert in_positive_set(mixed, [0.4, 0.6], rate)
    assert not in_positive_set(mixed, [0.4, 0.6], capacity(mixed) + 0.05)


def test_curvature_bound_bsc(bsc):
    res = curvature(bsc, 0.25)
    assert res.upsilon > 0
    assert res.fd_second <= res.upsilon
    assert curvature_bound(bsc, 0.25) == res.upsilon


def test_curvature_out_of_domain(bsc):
    with pytest.raises(DomainError):
        curvature_bound(bsc, capacity(bsc) + 1e-3)


def test_curve_shape(mixed):
    rates = np.linspace(0.01, capacity(mixed) - 1e-3, 30)
    pts = esp_curve(mixed, rates, jobs=3)
    assert [p.R for p in pts] == [float(r) for r in rates]
    assert curve_violations(pts) == []


def test_curve_violation_detected():
    from spherepack.exponent import ExponentPoint

    pts = [ExponentPoint(0.1, 0.5, 1.0), ExponentPoint(0.2, 0.6, 1.0)]
    assert curve_violations(pts)[0][0] == "NOT_NONINCREASING"
    with pytest.raises(ConvergenceError):
        curve_violations(pts, raise_on_error=True)
    assert math.isinf(ExponentPoint(0.0, math.inf, math.inf).esp)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import binomial_tail, enumerate_tail, random_density
from spherepack.divergence import petz_renyi
from spherepack.errors import DomainError, ValidationError
from spherepack.exponent import sigma_star
from spherepack.largedev import (
    BRR_CONST,
    ExtremalConstants,
    Increment,
    NsPair,
    brr_lower_bound,
    cumulants,
    extremal_constants,
    lambda0_grid,
    legendre,
    mixture_grid,
    ns_increment,
    nussbaum_szkola,
)

KET0 = np.diag([1.0, 0.0])
PLUS = np.full((2, 2), 0.5)


def test_ns_commuting_states():
    ns = nussbaum_szkola(np.diag([0.9, 0.1]), np.diag([0.5, 0.5]))
    order = np.argsort(ns.p)
    assert np.allclose(ns.p[order], [0.1, 0.9], atol=1e-15)
    assert np.allclose(ns.q[order], [0.5, 0.5], atol=1e-15)


def test_ns_pure_overlap():
    ns = nussbaum_szkola(KET0, PLUS)
    assert np.allclose(ns.p, [0.5, 0.5], atol=1e-14)
    assert np.allclose(np.sort(ns.q), [0.0, 0.5], atol=1e-14)
    assert not ns.dominated
    assert ns.renyi(1.0) == math.inf


def test_ns_identical_states():
    rho = random_density(np.random.default_rng(4), 3)
    ns = nussbaum_szkola(rho, rho)
    assert np.allclose(ns.llr[ns.p > 1e-6], 0.0, atol=1e-8) or ns.renyi(0.5) == pytest.approx(0.0, abs=1e-12)
    assert ns.renyi(1.0) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.floats(0.05, 1.0))
def test_ns_preserves_divergence(seed, alpha):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(rng, 3), random_density(rng, 3)
    ns = nussbaum_szkola(rho, sigma, check=False)
    dq = petz_renyi(rho, sigma, alpha)
    assert ns.renyi(alpha) == pytest.approx(dq, abs=1e-10 * max(1, abs(dq)))


def test_ns_pair_validation():
    with pytest.raises(ValidationError):
        NsPair(((0, 0),), np.array([0.9]), np.array([0.5]))
    with pytest.raises(ValidationError):
        NsPair(((0, 0), (0, 1)), np.array([0.5, 0.5]), np.array([0.5]))


@pytest.fixture
def mixed_ns(mixed):
    sp = sigma_star(mixed, 0.2)
    return nussbaum_szkola(mixed.w1.matrix, sp.sigma_star)


def test_cumulants_at_endpoints(mixed_ns):
    c0 = cumulants(mixed_ns, 0.0)
    assert c0.lambda0 == pytest.approx(0.0, abs=1e-14)
    assert c0.lambda0_prime == pytest.approx(-mixed_ns.renyi(1.0), abs=1e-12)
    c1 = cumulants(mixed_ns, 1.0)
    assert c1.lambda0 == pytest.approx(math.log(mixed_ns.q.sum()), abs=1e-14)


@pytest.mark.parametrize("t", [0.1, 0.4, 0.8])
def test_cumulant_finite_differences(mixed_ns, t):
    h = 1e-5
    lam = lambda s: float(lambda0_grid(mixed_ns, [s])[0][0])
    d1 = lambda s: float(lambda0_grid(mixed_ns, [s])[1][0])
    c = cumulants(mixed_ns, t)
    assert c.lambda0_prime == pytest.approx((lam(t + h) - lam(t - h)) / (2 * h), abs=1e-8)
    assert c.lambda0_second == pytest.approx((d1(t + h) - d1(t - h)) / (2 * h), abs=1e-7)
    assert c.lambda0_second > 0
    # reflection between the two cumulant functions
    assert c.lambda1 == pytest.approx(cumulants(mixed_ns, 1 - t).lambda0, abs=1e-12)


def test_cumulants_t_range(mixed_ns):
    with pytest.raises(DomainError):
        cumulants(mixed_ns, 1.5)


def test_legendre_interior(mixed_ns):
    lo = float(mixture_grid([mixed_ns], [1.0], [0.0])[1][0])
    hi = float(mixture_grid([mixed_ns], [1.0], [1.0])[1][0])
    z = 0.5 * (lo + hi)
    res = legendre([mixed_ns], [1.0], 0, z)
    assert 0 < res.t_star < 1 and not res.at_boundary
    assert float(mixture_grid([mixed_ns], [1.0], [res.t_star])[1][0]) == pytest.approx(z, abs=1e-10)
    grid = np.linspace(0, 1, 2001)
    lam = mixture_grid([mixed_ns], [1.0], grid)[0]
    assert res.value >= np.max(grid * z - lam) - 1e-12


def test_legendre_boundary(mixed_ns):
    lo = float(mixture_grid([mixed_ns], [1.0], [0.0])[1][0])
    res = legendre([mixed_ns], [1.0], 0, lo)
    assert res.at_boundary and res.t_star == 0.0
    assert res.value == pytest.approx(0.0, abs=1e-14)


def test_legendre_out_of_range(mixed_ns):
    hi = float(mixture_grid([mixed_ns], [1.0], [1.0])[1][0])
    with pytest.raises(DomainError) as err:
        legendre([mixed_ns], [1.0], 0, hi + 1.0)
    assert err.value.code == "SLOPE_RANGE"


def test_extremal_constants_symbol_independent(mixed):
    sp = sigma_star(mixed, 0.2)
    pairs = [nussbaum_szkola(w.matrix, sp.sigma_star) for w in mixed.outputs]
    a = extremal_constants(pairs[:1])
    b = extremal_constants(pairs[1:])
    for f in ("v_min", "v_max", "t_max"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-9)
    assert a.k_max == pytest.approx(BRR_CONST * a.t_max / a.v_min)
    assert math.log(a.a_const) == pytest.approx(a.log_a, abs=1e-12) or a.a_const == 0.0


def test_extremal_constants_from_extrema():
    c = ExtremalConstants.from_extrema(1.0, 2.0, 0.5)
    assert c.k_max == pytest.approx(BRR_CONST * 0.5)
    assert c.log_a == pytest.approx(-c.k_max - 0.5 * math.log(8 * math.pi))


def test_brr_fair_coin_precondition_fails():
    res = brr_lower_bound([(Increment(np.array([-1.0, 1.0]), np.array([0.5, 0.5])), 4)], 0.5)
    assert not res.precondition_ok
    assert res.bound == 0.0 and res.log_bound == -math.inf
    assert math.isfinite(res.log_formula)


def test_brr_bernoulli_below_exact_tail():
    inc = Increment(np.array([0.0, 1.0]), np.array([0.7, 0.3]))
    res = brr_lower_bound([(inc, 400)], 0.4)
    exact = binomial_tail(400, 0.3, 160)
    assert res.bound <= exact
    assert res.log_formula <= math.log(exact)
    assert res.t_star == pytest.approx(math.log(0.4 * 0.7 / (0.6 * 0.3)), abs=1e-9)


def test_brr_formula_monotone_in_n():
    inc = Increment(np.array([0.0, 1.0]), np.array([0.7, 0.3]))
    vals = [brr_lower_bound([(inc, n)], 0.4).log_formula for n in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_brr_out_of_range():
    inc = Increment(np.array([0.0, 1.0]), np.array([0.7, 0.3]))
    with pytest.raises(DomainError):
        brr_lower_bound([(inc, 10)], 1.0)


def test_ns_increment_tail_matches_enumeration(mixed_ns):
    inc = ns_increment(mixed_ns)
    z = float(inc.values @ inc.probs) + 0.3
    res = brr_lower_bound([(inc, 6)], z)
    assert res.bound <= enumerate_tail(inc.values, inc.probs, 6, z)


def test_ns_increment_requires_domination():
    with pytest.raises(DomainError):
        ns_increment(nussbaum_szkola(KET0, PLUS))


def test_increment_validation():
    with pytest.raises(ValidationError):
        Increment(np.array([0.0, np.inf]), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        Increment(np.array([0.0, 1.0]), np.array([0.5, 0.6]))

import itertools
import math

import numpy as np
import pytest

from oracles import product_outcomes
from spherepack.bound import (
    Thresholds,
    band_constants,
    default_xi,
    gamma_n,
    n_thresholds,
    nagaoka_exact_errors,
    nagaoka_exponent,
    sp_bound,
    threshold_n1,
    thresholds_from_constants,
)
from spherepack.divergence import capacity
from spherepack.errors import DomainError
from spherepack.exponent import esp_point


def test_gamma_n_values():
    assert gamma_n(1, 1.0) == 0.0
    assert gamma_n(100, 1.0) == pytest.approx(1.5 * math.log(100) / 100)


def test_n0_is_max():
    t = Thresholds(3, 17, 5)
    assert t.N0 == 17
    assert tuple(t) == (3, 17, 5, 17)


@pytest.mark.parametrize("gamma, xi", [(1.0, 0.1), (0.5, 0.01), (2.0, 0.05)])
def test_threshold_n1_is_least(gamma, xi):
    n1 = threshold_n1(gamma, xi)
    assert gamma_n(n1, gamma) <= xi
    assert n1 == 1 or gamma_n(n1 - 1, gamma) > xi
    assert all(gamma_n(n, gamma) <= xi for n in range(n1, n1 + 2000))


def test_bsc_thresholds_golden(bsc):
    thr = n_thresholds(bsc, 0.2)
    assert thr.N1 == 62
    assert thr.N2 == 413085788
    assert thr.N3 > thr.N2
    assert thr.N0 == thr.N3


def test_doubling_gamma_lowers_n3(bsc):
    consts = band_constants(bsc, 0.1, 0.2)
    a = thresholds_from_constants(consts, 1.0, 0.1)
    b = thresholds_from_constants(consts, 2.0, 0.1)
    assert b.N3 <= a.N3
    assert b.N2 == a.N2


def test_threshold_domain(bsc):
    with pytest.raises(DomainError):
        n_thresholds(bsc, 0.2, xi=0.3)
    with pytest.raises(DomainError):
        n_thresholds(bsc, 0.2, gamma=0.0)
    assert default_xi(bsc, 0.2) == pytest.approx(0.1)


def test_rate_at_capacity_rejected(bsc):
    with pytest.raises(DomainError) as err:
        sp_bound(bsc, capacity(bsc), 100)
    assert err.value.code == "RATE_RANGE"


def test_below_threshold_not_valid(bsc):
    rep = sp_bound(bsc, 0.2, 100)
    assert not rep.valid
    assert rep.n < rep.N0
    assert rep.log_theorem_bound < 0 and rep.log_direct_bound < 0


def test_valid_at_threshold_and_ordering(bsc):
    rep = sp_bound(bsc, 0.2, 100)
    big = sp_bound(bsc, 0.2, rep.N0)
    assert big.valid
    assert big.log_theorem_bound <= big.log_direct_bound


def test_infinite_region(pure):
    rep = sp_bound(pure, 0.1, 50)
    assert rep.infinite and rep.valid
    assert rep.theorem_bound == 0.0


def test_direct_exponent_approaches_esp(bsc):
    e = esp_point(bsc, 0.2).esp
    prev = math.inf
    for n in (10**3, 10**4, 10**5, 10**6):
        gap = abs(-sp_bound(bsc, 0.2, n).log_direct_bound / n - e)
        assert gap < prev
        prev = gap
    assert prev < 1e-3


def test_report_properties(bsc):
    rep = sp_bound(bsc, 0.2, 500)
    assert rep.direct_bound == pytest.approx(math.exp(rep.log_direct_bound))
    assert rep.R_n == pytest.approx(0.2 - gamma_n(500, 1.0))
    assert rep.esp_R == pytest.approx(esp_point(bsc, 0.2).esp)


def test_nagaoka_single_letter(bsc):
    res = nagaoka_exact_errors(bsc, [0.0, 1.0], 0.2, 1, sigma=np.eye(2) / 2)
    ns = res.ns_list[1]
    direct = float(np.sum(np.minimum(ns.p, res.delta * ns.q)))
    assert res.nagaoka_sum == pytest.approx(direct, abs=1e-15)
    assert res.alpha_u + res.delta * res.beta_u == pytest.approx(direct, abs=1e-15)


def test_nagaoka_enumeration_n10(mixed):
    res = nagaoka_exact_errors(mixed, [0.5, 0.5], 0.2, 10)
    letters = [res.ns_list[0]] * 5 + [res.ns_list[1]] * 5
    p, q = product_outcomes([ns.p for ns in letters], [ns.q for ns in letters])
    assert res.nagaoka_sum == pytest.approx(float(np.sum(np.minimum(p, res.delta * q))), abs=1e-12)
    assert res.phi == pytest.approx(esp_point(mixed, 0.2).esp, abs=1e-8)


def test_nagaoka_exponent_infinite_floor(pure):
    from spherepack.largedev import nussbaum_szkola

    ns = nussbaum_szkola(pure.w1.matrix, np.full((2, 2), 0.5))
    assert nagaoka_exponent([ns], [1.0], -math.log(ns.q.sum()) - 0.01) == math.inf


def test_nagaoka_brr_large_n(bsc):
    res = nagaoka_exact_errors(bsc, [0.5, 0.5], 0.2, 2000, sigma=np.eye(2) / 2)
    assert res.threshold_holds
    assert 0 <= res.alpha_u <= 1 and 0 <= res.beta_u <= 1
    assert res.brr_alpha is not None


def test_not_a_type(bsc):
    with pytest.raises(DomainError) as err:
        nagaoka_exact_errors(bsc, [0.3, 0.7], 0.2, 5)
    assert err.value.code == "NOT_A_TYPE"


def test_nagaoka_sum_matches_brute_force_all_types(bsc):
    n = 4
    for k in range(n + 1):
        res = nagaoka_exact_errors(bsc, [k / n, 1 - k / n], 0.2, n, sigma=np.eye(2) / 2)
        total = 0.0
        letters = [res.ns_list[0]] * k + [res.ns_list[1]] * (n - k)
        for idx in itertools.product(*(range(len(ns.p)) for ns in letters)):
            pp = math.prod(ns.p[i] for ns, i in zip(letters, idx))
            qq = math.prod(ns.q[i] for ns, i in zip(letters, idx))
            total += min(pp, res.delta * qq)
        assert res.nagaoka_sum == pytest.approx(total, abs=1e-14)

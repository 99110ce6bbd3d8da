import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lprecover.certify import (certify_recovery, check_condition_P, constant_c1, constant_c2,
                               constant_cp, constant_cpq, instance_optimality_constant,
                               io_constants, log_constant_cp, log_constant_cpq, lq_alpha,
                               sparsity_transfer, threshold_f, threshold_g)
from lprecover.errors import ConditionNotSatisfiedError, ProfileTooShortError
from lprecover.rip import RipEstimate


def test_published_constants():
    assert constant_c1(1, 3, 0.2, 0.2) == pytest.approx(12.04, abs=0.01)
    assert constant_c2(1, 3, 0.2, 0.2) == pytest.approx(8.77, abs=0.01)
    assert constant_c1(0.5, 3, 0.5, 0.5) == pytest.approx(5.31, abs=0.01)
    assert constant_c2(0.5, 3, 0.5, 0.5) == pytest.approx(4.31, abs=0.01)


def test_c1_p1_by_hand():
    # p = 1, k = 3, delta = 0.2: 2(1 + 1/sqrt3) / (sqrt(0.8) - sqrt(1.2)/sqrt3)
    expected = 2 * (1 + 1 / math.sqrt(3)) / (math.sqrt(0.8) - math.sqrt(1.2) / math.sqrt(3))
    assert constant_c1(1, 3, 0.2, 0.2) == pytest.approx(expected, rel=1e-14)


def test_constants_need_condition():
    with pytest.raises(ConditionNotSatisfiedError):
        constant_c1(1, 2, 0.5, 0.5)
    with pytest.raises(ConditionNotSatisfiedError):
        constant_c2(1, 2, 0.5, 0.5)
    assert instance_optimality_constant(0.5, 3, 0.5, 0.5) == pytest.approx(
        constant_c2(0.5, 3, 0.5, 0.5) ** 2, rel=1e-14)


def test_condition_P_edges():
    # p = 1, k = 3: delta_3S + 3 delta_4S < 2
    assert check_condition_P(0.0, 0.0, 3, 1)
    assert not check_condition_P(0.5, 0.5, 3, 1)  # equality is not enough
    with pytest.raises(ValueError):
        check_condition_P(0.1, 0.1, 1.0, 0.5)
    with pytest.raises(ValueError):
        check_condition_P(0.1, 0.1, 2, 1.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 30), st.sampled_from([0.1, 0.3, 0.5, 2 / 3, 0.9, 1.0]),
       st.floats(0, 1, exclude_max=True))
def test_condition_P_equals_threshold_f(m, p, delta):
    f = threshold_f(m, p)
    if abs(delta - f) > 1e-12:
        assert check_condition_P(delta, delta, m - 1, p) == (delta < f)


def test_threshold_values():
    assert abs(threshold_f(3, 0.5) - 7 / 9) < 1e-12
    for p in np.round(np.arange(0.1, 1.01, 0.1), 10):
        assert threshold_f(2, p) == 0.0
        assert threshold_g(2, p) == pytest.approx(0.45308, abs=1e-5)
    # m = 4, p = 1: 4(sqrt2 - 1) sqrt2 / (4(sqrt2 - 1) sqrt2 + 2)
    c = 4 * (math.sqrt(2) - 1) * math.sqrt(2)
    assert threshold_g(4, 1) == pytest.approx(c / (c + 2), rel=1e-14)
    assert threshold_g(4, 1) == pytest.approx(0.53950, abs=1e-5)


@pytest.mark.parametrize("m", [3, 5, 9])
def test_threshold_f_decreasing_in_p(m):
    vals = [threshold_f(m, p) for p in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_sparsity_transfer_value():
    assert sparsity_transfer(3, 4, 2 / 3) == 5


@pytest.mark.parametrize("root", [2, 3, 4, 5])
@pytest.mark.parametrize("S1", [1, 3, 7, 10])
def test_sparsity_transfer_exact_rationals(root, S1):
    # p = 2/3 makes k^(p/(2-p)) = sqrt(k), exact for perfect squares
    k = root * root
    expected = math.floor(Fraction(k + 1, root + 1) * S1)
    assert sparsity_transfer(S1, k, 2 / 3) == expected


def test_sparsity_transfer_p1_is_identity():
    assert sparsity_transfer(7, 3, 1) == 7


def test_sparsity_transfer_rejects_fractional_kS():
    with pytest.raises(ValueError):
        sparsity_transfer(3, 1.5, 0.5)


@pytest.mark.parametrize("p", np.linspace(0.1, 0.95, 12))
def test_cpq_at_q2_is_cp(p):
    assert constant_cpq(p, 2) == pytest.approx(constant_cp(p), rel=1e-10)


def test_cp_limits():
    assert constant_cp(1) == 1.0
    assert log_constant_cp(1) == 0.0
    assert math.isinf(constant_cp(0.05))
    assert math.isfinite(log_constant_cp(0.05))
    assert math.log(constant_cp(0.5)) == pytest.approx(log_constant_cp(0.5), rel=1e-12)
    assert math.log(constant_cpq(0.4, 1.5)) == pytest.approx(log_constant_cpq(0.4, 1.5), rel=1e-12)


def test_cp_by_hand():
    # p = 1/2: (2^(1/2) + 2^(3/4))^6 * (2 / ln 2)^4
    expected = (2**0.5 + 2**0.75) ** 6 * (2 / math.log(2)) ** 4
    assert constant_cp(0.5) == pytest.approx(expected, rel=1e-13)
    base2 = (2**0.5 + 2**0.75) ** 6 * 2.0**4
    assert constant_cp(0.5, log_base="base2") == pytest.approx(base2, rel=1e-13)


def test_lq_alpha_p1():
    for M, N, mu in [(20, 80, 0.3), (100, 300, 0.5), (5, 6, 0.1)]:
        assert lq_alpha(M, N, mu, 1) == pytest.approx(mu * math.sqrt(math.log(N / M) / M), rel=1e-12)


def test_lq_alpha_increasing_in_p():
    # B_p is inside B_1, so the LQ radius can only grow with p
    vals = [lq_alpha(50, 200, 0.4, p) for p in np.linspace(0.1, 1.0, 19)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_lq_alpha_validation():
    with pytest.raises(ValueError):
        lq_alpha(10, 10, 0.3, 1)
    with pytest.raises(ValueError):
        lq_alpha(10, 20, 0.8, 1)


def test_io_constants_by_hand():
    c = io_constants(1, 0.5, 0.5, 2.0)
    # gamma = mu = 1/2; C3 = 2 + (1/4 + 1) / (3/4 * 1/2)
    assert c.gamma_p == pytest.approx(0.5, rel=1e-15)
    assert c.C3 == pytest.approx(2 + 10 / 3, rel=1e-14)
    assert c.C_case_i == pytest.approx(2 + 10 / 3 + 2 * 3, rel=1e-14)
    assert c.C_case_iii == pytest.approx(1 + 2 + 10 / 3 + 4, rel=1e-14)


def test_io_constants_validation():
    with pytest.raises(ValueError):
        io_constants(0.5, 1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        io_constants(0.5, 0.5, 0.5, -1.0)


def _flat(delta, top):
    return [(s, delta) for s in range(1, top + 1)]


def test_certify_zero_profile_takes_smallest_k():
    cert = certify_recovery(_flat(0.0, 20), 4, 0.5)
    assert cert.satisfied and cert.k == pytest.approx(5 / 4)
    assert cert.C1 == pytest.approx(constant_c1(0.5, 1.25, 0.0, 0.0))


def test_certify_fixed_k():
    profile = [RipEstimate(S=s, delta_lower=0.2, trials=1, method="monte_carlo", seed=0)
               for s in range(1, 13)]
    cert = certify_recovery(profile, 3, 1, k=3)
    assert cert.satisfied
    assert cert.C1 == pytest.approx(12.04, abs=0.01) and cert.C2 == pytest.approx(8.77, abs=0.01)
    d = json.loads(cert.to_json())
    assert set(d) == {"p", "S", "k", "satisfied", "C1", "C2", "delta_kS", "delta_k1S"}


def test_certify_unsatisfied_reports_closest():
    cert = certify_recovery(_flat(0.9, 30), 3, 1)
    assert not cert.satisfied and cert.C1 is None
    # margin (k - 1) - 0.9(1 + k) grows with k, so the largest k is closest
    assert cert.k == pytest.approx(27 / 3)


def test_certify_monotone_in_p():
    prof = [(s, min(0.95, 0.05 * s)) for s in range(1, 21)]
    flags = [certify_recovery(prof, 4, p).satisfied for p in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert flags == sorted(flags, reverse=True)


def test_certify_profile_too_short():
    with pytest.raises(ProfileTooShortError):
        certify_recovery(_flat(0.0, 8), 4, 0.5)
